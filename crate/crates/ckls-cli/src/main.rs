//! `ckls` — command-line front end for CKLS-family diffusions: simulation,
//! fitting, stationary densities, boundary classification, half-life sweeps,
//! and bundled experiment reproduction.
//!
//! Exit codes: 0 success, 2 validation failure, 3 estimation failure,
//! 4 numerical failure, 64 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

mod commands;
mod manifest;
mod repro;
mod svg;

use commands::{
    run_classify, run_density, run_estimate, run_fit_data, run_halflife, run_simulate,
    ClassifyArgs, DensityArgs, EstimateArgs, FitDataArgs, HalflifeArgs, SimulateArgs,
};
use repro::{run_repro, ReproArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad inputs or I/O trouble (exit 2).
    Validation(String),
    /// The estimator rejected the data (exit 3).
    Estimation(String),
    /// Quadrature or simulation numerics failed (exit 4).
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Estimation(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Estimation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<ckls::model::ModelError> for CliError {
    fn from(e: ckls::model::ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ckls::simulate::SimError> for CliError {
    fn from(e: ckls::simulate::SimError) -> Self {
        use ckls::simulate::SimError::*;
        match e {
            DiffusionUndefined { .. } | NonFiniteState { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ckls::estimate::FitError> for CliError {
    fn from(e: ckls::estimate::FitError) -> Self {
        CliError::Estimation(e.to_string())
    }
}

impl From<ckls::stationary::DensityError> for CliError {
    fn from(e: ckls::stationary::DensityError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ckls::boundary::BoundaryError> for CliError {
    fn from(e: ckls::boundary::BoundaryError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ckls::meanrev::MeanRevError> for CliError {
    fn from(e: ckls::meanrev::MeanRevError) -> Self {
        use ckls::meanrev::MeanRevError::*;
        match e {
            ExcessiveCensoring { .. } => CliError::Numerical(e.to_string()),
            Sim(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ckls::io::IoError> for CliError {
    fn from(e: ckls::io::IoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "ckls",
    version,
    about = "Mean-reverting interest-rate diffusions: simulate, fit, analyze"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path and write it as CSV with a run manifest.
    Simulate(SimulateArgs),
    /// Fit a path CSV; print the fit as JSON.
    Estimate(EstimateArgs),
    /// Fit an external uniformly sampled rate series and classify the
    /// fitted dynamics.
    FitData(FitDataArgs),
    /// Tabulate the stationary density on a grid.
    Density(DensityArgs),
    /// Classify the boundary behavior of polynomial dynamics.
    Classify(ClassifyArgs),
    /// Half-life ratio sweep over (alpha, r0) cells.
    Halflife(HalflifeArgs),
    /// Reproduce a bundled experiment (table1 | fig1 | fig2).
    Repro(ReproArgs),
    /// Re-run a command from its manifest; outputs are byte-identical.
    Rerun(RerunArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct RerunArgs {
    /// Path to a manifest.json written by a previous run.
    #[arg(long)]
    manifest: PathBuf,
    /// Redirect outputs to this directory (defaults to the manifest's own).
    #[arg(long)]
    out: Option<String>,
}

fn run_rerun(args: &RerunArgs) -> Result<(), CliError> {
    let manifest = manifest::read_manifest(&args.manifest)?;
    let fallback_dir = args
        .manifest
        .parent()
        .unwrap_or(std::path::Path::new("."))
        .to_string_lossy()
        .into_owned();
    let out = Some(args.out.clone().unwrap_or(fallback_dir));
    let out = out.as_deref();
    let p = manifest.parameters.clone();
    match manifest.command.as_str() {
        "simulate" => run_simulate(&serde_json::from_value(p)?, out),
        "estimate" => run_estimate(&serde_json::from_value(p)?, out),
        "fit-data" => run_fit_data(&serde_json::from_value(p)?, out),
        "density" => run_density(&serde_json::from_value(p)?, out),
        "classify" => run_classify(&serde_json::from_value(p)?, out),
        "halflife" => run_halflife(&serde_json::from_value(p)?, out),
        "repro" => run_repro(&serde_json::from_value(p)?, out),
        other => Err(CliError::Validation(format!(
            "manifest names unknown command {other:?}"
        ))),
    }
}

fn configure_threads() {
    if let Ok(value) = std::env::var("CKLS_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Simulate(args) => run_simulate(args, None),
        Command::Estimate(args) => run_estimate(args, None),
        Command::FitData(args) => run_fit_data(args, None),
        Command::Density(args) => run_density(args, None),
        Command::Classify(args) => run_classify(args, None),
        Command::Halflife(args) => run_halflife(args, None),
        Command::Repro(args) => run_repro(args, None),
        Command::Rerun(args) => run_rerun(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
