//! Subcommand argument structs and runners. Every struct round-trips through
//! serde so a manifest can replay the exact invocation.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use ckls::boundary::classify;
use ckls::estimate::fit_path;
use ckls::io::{format_float, read_path_csv, write_path_csv};
use ckls::meanrev::{default_t_max, ratio_sweep};
use ckls::model::{ckls_as_poly, CklsParams, PolyDynamics};
use ckls::simulate::{simulate_ckls, PositivityScheme, SimConfig};
use ckls::stationary::StationaryDensity;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::manifest::ManifestRecorder;
use crate::CliError;

/// Print to stdout, ignoring a closed pipe (`ckls ... | head` must not panic).
pub fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Truncate,
    Reflect,
}

impl From<SchemeArg> for PositivityScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Truncate => PositivityScheme::FullTruncation,
            SchemeArg::Reflect => PositivityScheme::Reflection,
        }
    }
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("bad {what} entry {tok:?}: {e}")))
        })
        .collect()
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub beta1: f64,
    #[arg(long)]
    pub beta2: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub r0: f64,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t_horizon: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output directory (receives path.csv and manifest.json).
    #[arg(long)]
    pub out: String,
    #[arg(long, value_enum, default_value_t = SchemeArg::Truncate)]
    #[serde(default = "default_scheme")]
    pub scheme: SchemeArg,
    /// Permit dt beyond the drift stability bound.
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    pub allow_large_step: bool,
}

fn default_scheme() -> SchemeArg {
    SchemeArg::Truncate
}

pub fn run_simulate(args: &SimulateArgs, out_override: Option<&str>) -> Result<(), CliError> {
    let out = Path::new(out_override.unwrap_or(&args.out));
    let params = CklsParams::new(args.beta1, args.beta2, args.sigma, args.alpha, args.r0)?;
    let mut cfg = SimConfig::new(args.t_horizon, args.dt, args.seed)?
        .with_scheme(args.scheme.into());
    if args.allow_large_step {
        cfg = cfg.with_large_step_allowed();
    }
    let path = simulate_ckls(&params, &cfg)?;

    fs::create_dir_all(out)?;
    let mut recorder = ManifestRecorder::start("simulate", args, args.seed, out);
    let mut buf = Vec::with_capacity(path.len() * 48);
    write_path_csv(&path, &mut buf).map_err(|e| CliError::Validation(e.to_string()))?;
    fs::write(out.join("path.csv"), buf)?;
    recorder.add_output("path.csv");
    recorder.finish()?;
    emit(&format!("wrote {} samples to {}", path.len(), out.join("path.csv").display()));
    Ok(())
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    /// Input path CSV with header `t,r`.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long)]
    pub alpha: f64,
    /// Write the fit JSON here instead of standard output only.
    #[arg(long)]
    pub json_out: Option<String>,
}

pub fn run_estimate(args: &EstimateArgs, out_override: Option<&str>) -> Result<(), CliError> {
    let file = fs::File::open(&args.input)?;
    let path = read_path_csv(BufReader::new(file))?;
    let fit = fit_path(&path, args.alpha)?;
    let body = serde_json::to_string_pretty(&fit)?;
    match (&args.json_out, out_override) {
        (_, Some(dir)) => write_json_with_manifest("estimate", args, dir, "fit.json", &body)?,
        (Some(file), None) => {
            let dir = Path::new(file).parent().unwrap_or(Path::new("."));
            fs::create_dir_all(dir)?;
            fs::write(file, body.clone() + "\n")?;
            let name = Path::new(file)
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.clone());
            let mut recorder = ManifestRecorder::start("estimate", args, 0, dir);
            recorder.add_output(&name);
            recorder.finish()?;
            emit(&body);
        }
        (None, None) => emit(&body),
    }
    Ok(())
}

fn write_json_with_manifest<A: Serialize>(
    command: &str,
    args: &A,
    dir: &str,
    name: &str,
    body: &str,
) -> Result<(), CliError> {
    let dir = Path::new(dir);
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), body.to_string() + "\n")?;
    let mut recorder = ManifestRecorder::start(command, args, 0, dir);
    recorder.add_output(name);
    recorder.finish()?;
    emit(&body);
    Ok(())
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct FitDataArgs {
    /// Input rate series CSV with header `t,r`, uniformly spaced in time.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub json_out: Option<String>,
}

/// Fraction of nonpositive samples tolerated before the series is rejected.
const NONPOSITIVE_BUDGET: f64 = 0.05;

pub fn run_fit_data(args: &FitDataArgs, out_override: Option<&str>) -> Result<(), CliError> {
    let file = fs::File::open(&args.input)?;
    let path = read_path_csv(BufReader::new(file))?;
    let nonpositive = path.values().iter().filter(|&&v| v <= 0.0).count();
    if nonpositive as f64 > NONPOSITIVE_BUDGET * path.len() as f64 {
        return Err(CliError::Validation(format!(
            "NonPositiveRates: {nonpositive} of {} samples are <= 0, beyond the {:.0}% drop budget",
            path.len(),
            100.0 * NONPOSITIVE_BUDGET
        )));
    }
    let fit = fit_path(&path, args.alpha)?;

    let first_positive = path
        .values()
        .iter()
        .copied()
        .find(|&v| v > 0.0)
        .unwrap_or(1.0);
    let classification = CklsParams::new(
        fit.beta1_hat,
        fit.beta2_hat,
        fit.sigma_hat.max(f64::MIN_POSITIVE),
        args.alpha,
        first_positive,
    )
    .map(|p| classify(&ckls_as_poly(&p)));
    let report = match &classification {
        Ok(r) => serde_json::to_value(r)?,
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    };
    let body = serde_json::to_string_pretty(&serde_json::json!({
        "fit": fit,
        "classification": report,
    }))?;

    match (&args.json_out, out_override) {
        (_, Some(dir)) => write_json_with_manifest("fit-data", args, dir, "fit.json", &body)?,
        (Some(file), None) => {
            let dir = Path::new(file).parent().unwrap_or(Path::new("."));
            fs::create_dir_all(dir)?;
            fs::write(file, body.clone() + "\n")?;
            emit(&body);
        }
        (None, None) => emit(&body),
    }
    Ok(())
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub beta1: f64,
    #[arg(long)]
    pub beta2: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub alpha: f64,
    /// Start value; the stationary density does not depend on it.
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[arg(long)]
    pub grid_min: f64,
    #[arg(long)]
    pub grid_max: f64,
    #[arg(long)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-12)]
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[arg(long)]
    pub out: String,
}

fn default_r0() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-12
}

pub fn run_density(args: &DensityArgs, out_override: Option<&str>) -> Result<(), CliError> {
    if !(args.grid_min > 0.0) || args.grid_max <= args.grid_min || args.points < 2 {
        return Err(CliError::Validation(format!(
            "need 0 < grid-min < grid-max and points >= 2, got [{}, {}] x {}",
            args.grid_min, args.grid_max, args.points
        )));
    }
    let out = Path::new(out_override.unwrap_or(&args.out));
    let params = CklsParams::new(args.beta1, args.beta2, args.sigma, args.alpha, args.r0)?;
    let density = StationaryDensity::build(&params, args.tol)?;

    fs::create_dir_all(out)?;
    let mut recorder = ManifestRecorder::start("density", args, 0, out);
    let mut csv = String::from("r,pdf\n");
    let step = (args.grid_max - args.grid_min) / (args.points - 1) as f64;
    for i in 0..args.points {
        let r = args.grid_min + i as f64 * step;
        csv.push_str(&format!("{},{}\n", format_float(r), format_float(density.pdf(r))));
    }
    fs::write(out.join("density.csv"), csv)?;
    recorder.add_output("density.csv");
    recorder.finish()?;
    emit(&format!("wrote {} grid points to {}", args.points, out.join("density.csv").display()));
    Ok(())
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// Drift polynomial coefficients "c0,c1,..." (coefficient of x^i at i).
    #[arg(long)]
    pub drift: String,
    /// Diffusion base polynomial coefficients "c0,c1,...".
    #[arg(long)]
    pub diffusion: String,
    #[arg(long)]
    pub alpha: f64,
    /// Optional output directory for classification.json + manifest.
    #[arg(long)]
    pub out: Option<String>,
}

pub fn run_classify(args: &ClassifyArgs, out_override: Option<&str>) -> Result<(), CliError> {
    let drift = parse_list(&args.drift, "drift")?;
    let diffusion = parse_list(&args.diffusion, "diffusion")?;
    let dynamics = PolyDynamics::new(drift, diffusion, args.alpha)?;
    let report = classify(&dynamics);
    let body = serde_json::to_string_pretty(&report)?;
    let out = out_override.map(str::to_owned).or_else(|| args.out.clone());
    match out {
        Some(dir) => write_json_with_manifest("classify", args, &dir, "classification.json", &body)?,
        None => emit(&body),
    }
    Ok(())
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct HalflifeArgs {
    #[arg(long)]
    pub beta1: f64,
    #[arg(long)]
    pub beta2: f64,
    #[arg(long)]
    pub sigma: f64,
    /// Start values "r0,r0,..." for the sweep.
    #[arg(long)]
    pub r0_grid: String,
    /// Diffusion exponents "a,a,..." for the sweep.
    #[arg(long)]
    pub alphas: String,
    #[arg(long, default_value_t = 2000)]
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[arg(long, default_value_t = 42)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Censoring horizon; defaults to 50 / beta2.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub out: String,
}

fn default_paths() -> usize {
    2000
}

fn default_dt() -> f64 {
    1e-3
}

fn default_seed() -> u64 {
    42
}

pub fn run_halflife(args: &HalflifeArgs, out_override: Option<&str>) -> Result<(), CliError> {
    let out = Path::new(out_override.unwrap_or(&args.out));
    let r0_grid = parse_list(&args.r0_grid, "r0-grid")?;
    let alphas = parse_list(&args.alphas, "alphas")?;
    let template = CklsParams::new(
        args.beta1,
        args.beta2,
        args.sigma,
        *alphas.first().ok_or_else(|| CliError::Validation("alphas list is empty".into()))?,
        *r0_grid.first().ok_or_else(|| CliError::Validation("r0-grid list is empty".into()))?,
    )?;
    let t_max = args.t_max.unwrap_or_else(|| default_t_max(&template));
    // first_passage_time runs to t_max; the config horizon only has to be valid
    let cfg = SimConfig::new(t_max, args.dt, args.seed)?;
    let cells = ratio_sweep(&template, &r0_grid, &alphas, args.paths, &cfg, t_max)?;

    fs::create_dir_all(out)?;
    let mut recorder = ManifestRecorder::start("halflife", args, args.seed, out);
    let mut csv = String::from("alpha,r0,t_half,expected_tau,tau_se,ratio,n,censored\n");
    let mut failed = 0usize;
    for cell in &cells {
        match &cell.outcome {
            Ok(r) => csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                format_float(cell.alpha),
                format_float(cell.r0),
                format_float(r.t_half_deterministic),
                format_float(r.expected_tau),
                format_float(r.tau_std_error),
                format_float(r.ratio),
                r.n_paths,
                r.censored
            )),
            Err(e) => {
                failed += 1;
                eprintln!("cell (alpha {}, r0 {}) failed: {e}", cell.alpha, cell.r0);
                csv.push_str(&format!(
                    "{},{},nan,nan,nan,nan,0,0\n",
                    format_float(cell.alpha),
                    format_float(cell.r0)
                ));
            }
        }
    }
    fs::write(out.join("halflife.csv"), csv)?;
    recorder.add_output("halflife.csv");
    recorder.finish()?;
    emit(&format!(
        "wrote {} cells ({} failed) to {}",
        cells.len(),
        failed,
        out.join("halflife.csv").display()
    ));
    if failed * 10 > cells.len() {
        return Err(CliError::Numerical(format!(
            "{failed} of {} sweep cells failed",
            cells.len()
        )));
    }
    Ok(())
}
