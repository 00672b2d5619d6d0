use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cantyp::bns::{binomial, energy_distribution_bns, energy_distribution_trace, restricted_bns_channel, ExactDistribution};
use cantyp::channels::{linear_entropy_routes, lipschitz_estimate, ChannelFile};
use cantyp::restriction::enumerate_basis;
use cantyp::typicality::{bound_eq3, run_experiment, EtaMode, ExperimentConfig};
use clap::Args;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult};
use crate::output::{self, float};
use crate::spec::ChannelSpec;
use crate::{Command, Produced};

/// Largest `N` accepted by `figure-bound`.
pub const FIGURE_BOUND_MAX_SITES: usize = 12;

fn params<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

fn produced(primary: &Path, others: Vec<PathBuf>, parameters: serde_json::Value, seed: Option<u64>) -> Produced {
    Produced { primary: primary.to_path_buf(), others, parameters, master_seed: seed }
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelSpec,
    #[arg(long, default_value = "entropy.json")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EntropyReport {
    channel: ChannelSpec,
    dim_in: usize,
    dim_out: usize,
    kraus_rank: usize,
    linear_entropy: f64,
    choi_purity: Option<f64>,
    kraus_purity: f64,
    route_gap: Option<f64>,
    routes_agree: Option<bool>,
    bound_eq3: f64,
}

/// Agreement reported between the Choi and Kraus purity routes.
const REPORT_ROUTE_TOL: f64 = 1e-10;

pub fn entropy(a: &EntropyArgs) -> CliResult<Produced> {
    let ch = a.channel.build()?;
    let routes = linear_entropy_routes(&ch)?;
    let report = EntropyReport {
        channel: a.channel.clone(),
        dim_in: ch.dim_in(),
        dim_out: ch.dim_out(),
        kraus_rank: ch.kraus_rank(),
        linear_entropy: routes.linear_entropy,
        choi_purity: routes.choi_purity,
        kraus_purity: routes.kraus_purity,
        route_gap: routes.route_gap(),
        routes_agree: routes.route_gap().map(|g| g <= REPORT_ROUTE_TOL),
        bound_eq3: bound_eq3(&ch)?,
    };
    println!("linear_entropy {}", float(report.linear_entropy));
    match report.choi_purity {
        Some(p) => println!("choi_purity {}", float(p)),
        None => println!("choi_purity skipped (Choi matrix too large)"),
    }
    println!("kraus_purity {}", float(report.kraus_purity));
    if let Some(gap) = report.route_gap {
        println!("route_gap {gap:e}");
    }
    println!("bound_eq3 {}", float(report.bound_eq3));
    output::write_json(&a.out, &report)?;
    Ok(produced(&a.out, vec![], params(a), None))
}

#[derive(Debug, Args, Serialize)]
pub struct FigureEnergyArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_sites: usize,
    #[arg(long = "Np")]
    #[serde(rename = "Np")]
    pub n_excited: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "figure_energy.csv")]
    pub out: PathBuf,
}

/// `m,probability,numerator,denominator` with the common denominator `d`.
fn exact_csv(dist: &ExactDistribution, max_m: usize, d: &BigInt) -> String {
    let mut out = String::from("m,probability,numerator,denominator\n");
    let scale = BigRational::from_integer(d.clone());
    for m in 0..=max_m {
        let p = dist.probability(m);
        let num = (&p * &scale).to_integer();
        let _ = writeln!(out, "{m},{},{num},{d}", float(p.to_f64().unwrap_or(f64::NAN)));
    }
    out
}

pub fn figure_energy(a: &FigureEnergyArgs) -> CliResult<Produced> {
    let (n, np, k) = (a.n_sites, a.n_excited, a.k);
    if k == 0 || n % k != 0 {
        return Err(CliError::usage(format!("k = {k} does not divide N = {n}")));
    }
    if np > n {
        return Err(CliError::usage(format!("Np = {np} exceeds N = {n}")));
    }
    let trace = energy_distribution_trace(n, np, k)?;
    let bns = energy_distribution_bns(n, np, k)?;
    for (name, dist) in [("trace", &trace), ("bns", &bns)] {
        if dist.total() != BigRational::from_integer(1.into()) {
            return Err(CliError::internal(format!("{name} distribution does not sum to 1")));
        }
    }
    let mut csv = String::from("m,p_trace,p_bns\n");
    for m in 0..=k {
        let _ = writeln!(csv, "{m},{},{}", float(trace.probability_f64(m)), float(bns.probability_f64(m)));
    }
    output::write_text(&a.out, &csv)?;
    let d = BigInt::from(binomial(n as u64, np as u64));
    let trace_path = output::sibling(&a.out, "_trace.csv");
    let bns_path = output::sibling(&a.out, "_bns.csv");
    let plot_path = output::sibling(&a.out, ".gp");
    output::write_text(&trace_path, &exact_csv(&trace, k, &d))?;
    output::write_text(&bns_path, &exact_csv(&bns, k, &d))?;
    output::write_text(&plot_path, &output::energy_plot_script(&a.out))?;
    println!("mean_trace {}", float(trace.mean().to_f64().unwrap_or(f64::NAN)));
    println!("mean_bns {}", float(bns.mean().to_f64().unwrap_or(f64::NAN)));
    Ok(produced(&a.out, vec![trace_path, bns_path, plot_path], params(a), None))
}

#[derive(Debug, Args, Serialize)]
pub struct FigureBoundArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_sites: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "figure_bound.csv")]
    pub out: PathBuf,
}

pub fn figure_bound(a: &FigureBoundArgs) -> CliResult<Produced> {
    let (n, k) = (a.n_sites, a.k);
    if n > FIGURE_BOUND_MAX_SITES {
        return Err(CliError::usage(format!("N = {n} exceeds the dense limit {FIGURE_BOUND_MAX_SITES}")));
    }
    if k == 0 || n % k != 0 {
        return Err(CliError::usage(format!("k = {k} does not divide N = {n}")));
    }
    if a.samples == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    let mut csv = String::from("Np,d_R,mean_distance,std_distance,bound_eq3\n");
    for np in 1..n {
        let ch = restricted_bns_channel(k, &enumerate_basis(n, np)?)?;
        let mut cfg = ExperimentConfig::new(ch, a.samples, a.seed);
        cfg.epsilon_grid.clear();
        let r = run_experiment(&cfg)?;
        let _ = writeln!(
            csv,
            "{np},{},{},{},{}",
            r.d_r,
            float(r.mean_distance),
            float(r.std_distance),
            float(r.bound_eq3)
        );
        eprintln!("Np={np} d_R={} mean={:.6} bound={:.6}", r.d_r, r.mean_distance, r.bound_eq3);
    }
    output::write_text(&a.out, &csv)?;
    let plot_path = output::sibling(&a.out, ".gp");
    output::write_text(&plot_path, &output::bound_plot_script(&a.out))?;
    Ok(produced(&a.out, vec![plot_path], params(a), Some(a.seed)))
}

#[derive(Debug, Args, Serialize)]
pub struct TypicalityArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "typicality.json")]
    pub out: PathBuf,
    /// Also write the per-sample distances as `index,distance` CSV.
    #[arg(long)]
    pub distances: Option<PathBuf>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}

/// JSON experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalityConfig {
    pub channel: ChannelSpec,
    pub samples: usize,
    pub master_seed: u64,
    #[serde(default = "default_epsilons")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub eta_mode: EtaMode,
}

pub fn typicality(a: &TypicalityArgs) -> CliResult<Produced> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::usage(format!("reading config {}: {e}", a.config.display())))?;
    let mut cfg: TypicalityConfig =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", a.config.display())))?;
    if let Some(dir) = a.config.parent() {
        cfg.channel.resolve_relative(dir);
    }
    let channel = cfg.channel.build()?;
    let experiment = ExperimentConfig {
        channel,
        samples: cfg.samples,
        master_seed: cfg.master_seed,
        epsilon_grid: cfg.epsilon_grid.clone(),
        eta_mode: cfg.eta_mode,
        scenario: cfg.channel.partial_trace_scenario()?,
    };
    let report = run_experiment(&experiment)?;
    if let Some(eq1) = report.bound_eq1 {
        if (eq1 - report.bound_eq3).abs() > 1e-10 {
            return Err(CliError::internal(format!("bound_eq1 {eq1} and bound_eq3 {} disagree", report.bound_eq3)));
        }
    }
    output::write_json(&a.out, &report)?;
    let mut others = vec![];
    if let Some(path) = &a.distances {
        output::write_text(path, &report.distances_csv())?;
        others.push(path.clone());
    }
    println!(
        "d_R {} d_S {} mean {} std {} bound_eq3 {}",
        report.d_r,
        report.d_s,
        float(report.mean_distance),
        float(report.std_distance),
        float(report.bound_eq3)
    );
    for row in &report.tail_table {
        println!("eps {} tail {} levy {}", row.epsilon, float(row.empirical_tail_fraction), float(row.levy_bound));
    }
    let parameters = serde_json::json!({ "args": params(a), "config": params(&cfg) });
    Ok(produced(&a.out, others, parameters, Some(cfg.master_seed)))
}

#[derive(Debug, Args, Serialize)]
pub struct LipschitzArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelSpec,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "lipschitz.json")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct LipschitzReport {
    channel: ChannelSpec,
    trials: usize,
    seed: u64,
    estimate: f64,
}

pub fn lipschitz(a: &LipschitzArgs) -> CliResult<Produced> {
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let ch = a.channel.build()?;
    let estimate = lipschitz_estimate(&ch, a.trials, a.seed)?;
    println!("lipschitz_lower_bound {}", float(estimate));
    let report = LipschitzReport { channel: a.channel.clone(), trials: a.trials, seed: a.seed, estimate };
    output::write_json(&a.out, &report)?;
    Ok(produced(&a.out, vec![], params(a), Some(a.seed)))
}

#[derive(Debug, Args, Serialize)]
pub struct SaveChannelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelSpec,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn save_channel(a: &SaveChannelArgs) -> CliResult<Produced> {
    let ch = a.channel.build()?;
    let file = ChannelFile::from_channel(&ch);
    output::write_text(&a.out, &(file.to_json()? + "\n"))?;
    println!("saved {} Kraus operators ({}x{})", ch.kraus_rank(), ch.dim_out(), ch.dim_in());
    Ok(produced(&a.out, vec![], params(a), None))
}

fn into_dir(path: &mut PathBuf, dir: &Path) -> CliResult<()> {
    let name = path.file_name().ok_or_else(|| CliError::usage(format!("output {} has no file name", path.display())))?;
    *path = dir.join(name);
    Ok(())
}

/// Points every output of `cmd` into `dir`, keeping file names.
pub fn redirect(cmd: &mut Command, dir: &Path) -> CliResult<()> {
    match cmd {
        Command::Entropy(a) => into_dir(&mut a.out, dir),
        Command::FigureEnergy(a) => into_dir(&mut a.out, dir),
        Command::FigureBound(a) => into_dir(&mut a.out, dir),
        Command::Typicality(a) => {
            if let Some(d) = a.distances.as_mut() {
                into_dir(d, dir)?;
            }
            into_dir(&mut a.out, dir)
        }
        Command::Lipschitz(a) => into_dir(&mut a.out, dir),
        Command::SaveChannel(a) => into_dir(&mut a.out, dir),
        Command::Replay(_) => Err(CliError::usage("replay cannot be nested")),
    }
}
