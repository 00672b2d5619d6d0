//! `cantyp`: experiments on canonical typicality for channel-defined
//! subsystems.
//!
//! Every command writes its primary output plus a `<output>.manifest.json`
//! run record; `cantyp replay --manifest …` re-runs it. Set `CANTYP_THREADS`
//! to fix the worker count (speed only, results never change).

mod commands;
mod exit;
mod manifest;
mod output;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::exit::{CliError, CliResult};
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "cantyp", version, about = "Canonical typicality for generalized subsystems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel linear entropy by two routes, and the entropy bound.
    Entropy(commands::EntropyArgs),
    /// Exact energy distributions of the partial-trace and BnS canonical states.
    FigureEnergy(commands::FigureEnergyArgs),
    /// Mean distance and entropy bound of the BnS channel for Np = 1..N-1.
    FigureBound(commands::FigureBoundArgs),
    /// Full typicality experiment from a JSON config.
    Typicality(commands::TypicalityArgs),
    /// Lower-bound estimate of the trace-norm Lipschitz constant.
    Lipschitz(commands::LipschitzArgs),
    /// Write a channel's Kraus operators as JSON.
    SaveChannel(commands::SaveChannelArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, clap::Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the regenerated outputs here instead of over the originals.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Compare the regenerated outputs with the recorded ones byte for byte.
    #[arg(long)]
    pub check: bool,
}

/// What a command produced.
pub struct Produced {
    pub primary: PathBuf,
    pub others: Vec<PathBuf>,
    pub parameters: serde_json::Value,
    pub master_seed: Option<u64>,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("CANTYP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("CANTYP_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()))
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Entropy(_) => "entropy",
        Command::FigureEnergy(_) => "figure-energy",
        Command::FigureBound(_) => "figure-bound",
        Command::Typicality(_) => "typicality",
        Command::Lipschitz(_) => "lipschitz",
        Command::SaveChannel(_) => "save-channel",
        Command::Replay(_) => "replay",
    }
}

fn execute(cmd: &Command) -> CliResult<Produced> {
    match cmd {
        Command::Entropy(a) => commands::entropy(a),
        Command::FigureEnergy(a) => commands::figure_energy(a),
        Command::FigureBound(a) => commands::figure_bound(a),
        Command::Typicality(a) => commands::typicality(a),
        Command::Lipschitz(a) => commands::lipschitz(a),
        Command::SaveChannel(a) => commands::save_channel(a),
        Command::Replay(_) => Err(CliError::usage("replay cannot be nested")),
    }
}

/// Runs `cmd` and writes its manifest.
fn run_recorded(cmd: &Command, args: Vec<String>) -> CliResult<RunManifest> {
    let start = Instant::now();
    let produced = execute(cmd)?;
    let mut outputs = vec![produced.primary.clone()];
    outputs.extend(produced.others);
    let manifest = RunManifest {
        command: command_name(cmd).into(),
        args,
        cwd: std::env::current_dir()?,
        parameters: produced.parameters,
        master_seed: produced.master_seed,
        version: env!("CARGO_PKG_VERSION").into(),
        outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let path = manifest.write(&produced.primary)?;
    eprintln!("manifest: {}", path.display());
    Ok(manifest)
}

fn absolute(p: &Path) -> CliResult<PathBuf> {
    Ok(if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir()?.join(p) })
}

fn replay(r: &ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::read(&r.manifest)?;
    let out_dir = r.out_dir.as_deref().map(absolute).transpose()?;
    std::env::set_current_dir(&manifest.cwd)
        .map_err(|e| CliError::data(format!("manifest cwd {}: {e}", manifest.cwd.display())))?;
    let recorded: Vec<(PathBuf, Option<Vec<u8>>)> =
        manifest.outputs.iter().map(|p| (p.clone(), std::fs::read(p).ok())).collect();
    let argv = std::iter::once("cantyp".to_string()).chain(manifest.args.iter().cloned());
    let mut cli = Cli::try_parse_from(argv).map_err(|e| CliError::usage(format!("manifest arguments: {e}")))?;
    if let Some(dir) = &out_dir {
        commands::redirect(&mut cli.command, dir)?;
    }
    let rerun = run_recorded(&cli.command, manifest.args.clone())?;
    if r.check {
        for ((old_path, old_bytes), new_path) in recorded.iter().zip(&rerun.outputs) {
            let old = old_bytes
                .as_ref()
                .ok_or_else(|| CliError::data(format!("recorded output {} is missing", old_path.display())))?;
            let new = std::fs::read(new_path)?;
            if *old != new {
                return Err(CliError::internal(format!(
                    "{} differs from recorded {}",
                    new_path.display(),
                    old_path.display()
                )));
            }
        }
        println!("replay: {} outputs identical", recorded.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Replay(r) => replay(r),
        cmd => run_recorded(cmd, raw[1..].to_vec()).map(|_| ()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
