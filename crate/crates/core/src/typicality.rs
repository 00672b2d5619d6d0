//! Monte Carlo canonical typicality for channel-defined subsystems.
//!
//! For a channel `Λ` on the restricted space `H_R`, pure states `ψ` drawn
//! from the Haar measure give `ϱ_ψ = Λ(ψψ†)`; these concentrate around the
//! generalized canonical state `Ω = Λ(1/d_R)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{depolarizing_range, lipschitz_estimate, linear_entropy, QuantumChannel};
use crate::error::{Error, Result};
use crate::qcore::{derive_seed, haar_sample, trace_distance, DensityOperator};
use crate::restriction::PartialTraceScenario;

/// Concentration constant `C = 2/(9π³)` of the Levy bound.
pub const LEVY_CONSTANT: f64 = 2.0 / (9.0 * PI * PI * PI);

/// Number of standard errors allowed between the sample mean and a bound.
pub const SIGMA_SLACK: f64 = 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EtaMode {
    /// `η = 1`, valid for every channel.
    #[default]
    FixedOne,
    /// Lower-bound estimate from `trials` hill-climbing runs. Tail
    /// comparisons made with it are diagnostic only.
    Estimated { trials: usize },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub channel: QuantumChannel,
    pub samples: usize,
    pub master_seed: u64,
    pub epsilon_grid: Vec<f64>,
    pub eta_mode: EtaMode,
    /// Set when the channel is a partial trace, to report the bound in
    /// terms of the effective environment dimension as well.
    pub scenario: Option<PartialTraceScenario>,
}

impl ExperimentConfig {
    pub fn new(channel: QuantumChannel, samples: usize, master_seed: u64) -> Self {
        Self {
            channel,
            samples,
            master_seed,
            epsilon_grid: vec![0.05, 0.1, 0.2],
            eta_mode: EtaMode::FixedOne,
            scenario: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        if let Some(eps) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::InvalidParameter(format!("epsilon {eps} outside (0, 1]")));
        }
        if let EtaMode::Estimated { trials: 0 } = self.eta_mode {
            return Err(Error::InvalidParameter("eta estimation needs at least one trial".into()));
        }
        if let Some(s) = &self.scenario {
            if s.d_r() != self.channel.dim_in() || s.d_s() != self.channel.dim_out() {
                return Err(Error::InvalidParameter(format!(
                    "scenario dims {}->{} do not match channel {}->{}",
                    s.d_r(),
                    s.d_s(),
                    self.channel.dim_in(),
                    self.channel.dim_out()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub epsilon: f64,
    /// Fraction of samples with `|D − mean| > ε`.
    pub empirical_tail_fraction: f64,
    /// Levy bound clamped to `[0, 1]`.
    pub levy_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub d_r: usize,
    pub d_s: usize,
    pub samples: usize,
    pub master_seed: u64,
    pub mean_distance: f64,
    pub std_distance: f64,
    pub max_distance: f64,
    pub bound_eq3: f64,
    pub bound_eq1: Option<f64>,
    pub linear_entropy: f64,
    pub eta_used: f64,
    pub eta_mode: EtaMode,
    /// `"rigorous"` with `η = 1`, `"diagnostic only"` with an estimated `η`.
    pub tail_comparison: String,
    pub tail_table: Vec<TailRow>,
    #[serde(skip)]
    pub distances: Vec<f64>,
}

impl TypicalityReport {
    /// `mean ≤ bound + 3·std/√samples`
    pub fn mean_within_bound(&self) -> bool {
        self.mean_distance <= self.bound_eq3 + SIGMA_SLACK * self.std_distance / (self.samples as f64).sqrt()
    }

    /// Every empirical tail fraction is at most its clamped Levy bound.
    pub fn tails_within_levy(&self) -> bool {
        self.tail_table.iter().all(|r| r.empirical_tail_fraction <= r.levy_bound)
    }

    /// `index,distance` lines with a header.
    pub fn distances_csv(&self) -> String {
        let mut out = String::from("index,distance\n");
        for (i, d) in self.distances.iter().enumerate() {
            out.push_str(&format!("{i},{d:.17e}\n"));
        }
        out
    }
}

/// `Ω = Λ(1/d_R)`
pub fn canonical_state(ch: &QuantumChannel) -> Result<DensityOperator> {
    ch.apply(&DensityOperator::maximally_mixed(ch.dim_in())?)
}

/// Trace distances `D(Λ(ψ_iψ_i†), Ω)` for `ψ_i = haar_sample(d_R,
/// derive_seed(master_seed, i))`, in index order. Each entry depends only on
/// its index, so the result does not depend on the thread count.
pub fn sample_distances(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let omega = canonical_state(&cfg.channel)?;
    distances_against(&cfg.channel, &omega, cfg.samples, cfg.master_seed)
}

fn distances_against(ch: &QuantumChannel, omega: &DensityOperator, samples: usize, seed: u64) -> Result<Vec<f64>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let psi = haar_sample(ch.dim_in(), derive_seed(seed, i as u64))?;
            trace_distance(&ch.apply_pure(&psi)?, omega)
        })
        .collect()
}

/// `½·√(d_S·(1 − S_L(Λ)))` with `d_S` the declared output dimension.
pub fn bound_eq3(ch: &QuantumChannel) -> Result<f64> {
    let s_l = linear_entropy(ch)?;
    Ok(0.5 * (ch.dim_out() as f64 * (1.0 - s_l)).max(0.0).sqrt())
}

/// `½·√(d_S / d_E^eff)`
pub fn bound_eq1(scenario: &PartialTraceScenario) -> Result<f64> {
    let d_eff = scenario.effective_environment_dimension()?;
    Ok(0.5 * (scenario.d_s() as f64 / d_eff).sqrt())
}

/// Closed form of the entropy bound for the depolarizing channel on `d`
/// dimensions: `½·√(λ(2−λ)/d + d(1−λ)²)`.
pub fn depolarizing_bound(d: usize, lambda: f64) -> Result<f64> {
    if !depolarizing_range(d, lambda).within_cp_range {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} is not completely positive for d = {d}")));
    }
    let d = d as f64;
    Ok(0.5 * (lambda * (2.0 - lambda) / d + d * (1.0 - lambda).powi(2)).max(0.0).sqrt())
}

/// `2·exp(−C·d_R·ε²/(4η²))`, unclamped. `η = 0` means the channel is
/// constant on `H_R`, so every tail with `ε > 0` is empty.
pub fn levy_tail_bound(d_r: usize, epsilon: f64, eta: f64) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    2.0 * (-LEVY_CONSTANT * d_r as f64 * epsilon * epsilon / (4.0 * eta * eta)).exp()
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TypicalityReport> {
    cfg.validate()?;
    let ch = &cfg.channel;
    let distances = sample_distances(cfg)?;
    let (mean, std) = mean_and_std(&distances);
    let max = distances.iter().copied().fold(0.0f64, f64::max);
    let s_l = linear_entropy(ch)?;
    let eq3 = bound_eq3(ch)?;
    let eq1 = cfg.scenario.as_ref().map(bound_eq1).transpose()?;
    let (eta, tail_comparison) = match cfg.eta_mode {
        EtaMode::FixedOne => (1.0, "rigorous"),
        EtaMode::Estimated { trials } => (lipschitz_estimate(ch, trials, cfg.master_seed)?, "diagnostic only"),
    };
    let n = distances.len() as f64;
    let tail_table = cfg
        .epsilon_grid
        .iter()
        .map(|&epsilon| TailRow {
            epsilon,
            empirical_tail_fraction: distances.iter().filter(|d| (*d - mean).abs() > epsilon).count() as f64 / n,
            levy_bound: levy_tail_bound(ch.dim_in(), epsilon, eta).clamp(0.0, 1.0),
        })
        .collect();
    Ok(TypicalityReport {
        d_r: ch.dim_in(),
        d_s: ch.dim_out(),
        samples: cfg.samples,
        master_seed: cfg.master_seed,
        mean_distance: mean,
        std_distance: std,
        max_distance: max,
        bound_eq3: eq3,
        bound_eq1: eq1,
        linear_entropy: s_l,
        eta_used: eta,
        eta_mode: cfg.eta_mode,
        tail_comparison: tail_comparison.into(),
        tail_table,
        distances,
    })
}
