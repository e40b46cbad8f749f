//! Bundled experiment drivers: the parameter-recovery table, the
//! convergence-with-horizon figure, and the half-life ratio figure. Each run
//! writes CSVs (authoritative) plus SVG summaries and a manifest.

use std::fs;
use std::path::Path;

use ckls::estimate::fit_path;
use ckls::io::format_float;
use ckls::meanrev::ratio_sweep;
use ckls::model::CklsParams;
use ckls::presets::{PARAMETER_BLOCKS, TABLE_DT, TABLE_HORIZONS};
use ckls::simulate::{simulate_ckls, SimConfig};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::emit;
use crate::manifest::ManifestRecorder;
use crate::svg::{line_chart, Series};
use crate::CliError;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Parameter recovery across the five blocks and four horizons.
    Table1,
    /// Estimate trajectories against the horizon for three start-vs-mean gaps.
    Fig1,
    /// Half-life ratio sweep over start values and exponents.
    Fig2,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long)]
    pub out: String,
    /// Replications per scenario (table1).
    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[arg(long, default_value_t = 42)]
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seeds() -> u64 {
    10
}

fn default_seed() -> u64 {
    42
}

pub fn run_repro(args: &ReproArgs, out_override: Option<&str>) -> Result<(), CliError> {
    let out = Path::new(out_override.unwrap_or(&args.out)).to_path_buf();
    fs::create_dir_all(&out)?;
    let mut recorder = ManifestRecorder::start("repro", args, args.seed, &out);
    match args.experiment {
        Experiment::Table1 => table1(args, &out, &mut recorder)?,
        Experiment::Fig1 => fig1(args, &out, &mut recorder)?,
        Experiment::Fig2 => fig2(args, &out, &mut recorder)?,
    }
    recorder.finish()
}

fn table1(args: &ReproArgs, out: &Path, recorder: &mut ManifestRecorder) -> Result<(), CliError> {
    struct Cell {
        block: usize,
        seed: u64,
        fits: Vec<(f64, Result<ckls::estimate::FitResult, String>)>,
    }
    let jobs: Vec<(usize, u64)> = (0..PARAMETER_BLOCKS.len())
        .flat_map(|b| (0..args.seeds).map(move |s| (b, s)))
        .collect();
    let cells: Vec<Cell> = jobs
        .into_par_iter()
        .map(|(block, seed)| {
            let p = PARAMETER_BLOCKS[block].params();
            let cfg = SimConfig::new(*TABLE_HORIZONS.last().unwrap(), TABLE_DT, args.seed)
                .expect("valid config")
                .with_stream((block as u64) << 32 | seed);
            let path = simulate_ckls(&p, &cfg).expect("preset simulation");
            let fits = TABLE_HORIZONS
                .iter()
                .map(|&t| {
                    let fit = path
                        .prefix(t)
                        .map_err(|e| e.to_string())
                        .and_then(|pre| fit_path(&pre, p.alpha()).map_err(|e| e.to_string()));
                    (t, fit)
                })
                .collect();
            Cell { block, seed, fits }
        })
        .collect();

    let mut detail = String::from(
        "block,alpha,r0,T,seed,beta2_true,beta1_true,sigma_true,beta2_hat,beta1_hat,sigma_hat\n",
    );
    let mut failed = 0usize;
    let mut total = 0usize;
    for cell in &cells {
        let b = PARAMETER_BLOCKS[cell.block];
        for (t, fit) in &cell.fits {
            total += 1;
            match fit {
                Ok(f) => detail.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    b.name,
                    format_float(b.alpha),
                    format_float(b.r0),
                    t,
                    cell.seed,
                    format_float(b.beta2),
                    format_float(b.beta1),
                    format_float(b.sigma),
                    format_float(f.beta2_hat),
                    format_float(f.beta1_hat),
                    format_float(f.sigma_hat),
                )),
                Err(e) => {
                    failed += 1;
                    eprintln!("block {} T {} seed {} failed: {e}", b.name, t, cell.seed);
                    detail.push_str(&format!(
                        "{},{},{},{},{},{},{},{},nan,nan,nan\n",
                        b.name,
                        format_float(b.alpha),
                        format_float(b.r0),
                        t,
                        cell.seed,
                        format_float(b.beta2),
                        format_float(b.beta1),
                        format_float(b.sigma),
                    ));
                }
            }
        }
    }
    fs::write(out.join("table1_detail.csv"), detail)?;
    recorder.add_output("table1_detail.csv");

    // across-seed means, one row per (block, horizon)
    let mut summary = String::from(
        "block,alpha,r0,T,beta2_true,beta1_true,sigma_true,beta2_hat_mean,beta1_hat_mean,sigma_hat_mean,n_seeds\n",
    );
    for (block, b) in PARAMETER_BLOCKS.iter().enumerate() {
        for (ti, t) in TABLE_HORIZONS.iter().enumerate() {
            let fits: Vec<&ckls::estimate::FitResult> = cells
                .iter()
                .filter(|c| c.block == block)
                .filter_map(|c| c.fits[ti].1.as_ref().ok())
                .collect();
            let n = fits.len();
            let mean = |f: &dyn Fn(&ckls::estimate::FitResult) -> f64| -> f64 {
                fits.iter().map(|r| f(r)).sum::<f64>() / n.max(1) as f64
            };
            summary.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                b.name,
                format_float(b.alpha),
                format_float(b.r0),
                t,
                format_float(b.beta2),
                format_float(b.beta1),
                format_float(b.sigma),
                format_float(mean(&|r| r.beta2_hat)),
                format_float(mean(&|r| r.beta1_hat)),
                format_float(mean(&|r| r.sigma_hat)),
                n,
            ));
        }
    }
    fs::write(out.join("table1_summary.csv"), summary)?;
    recorder.add_output("table1_summary.csv");
    emit(&format!(
        "table1: {} scenario rows, {} of {} fits failed",
        PARAMETER_BLOCKS.len() * TABLE_HORIZONS.len(),
        failed,
        total
    ));
    if failed * 10 > total {
        return Err(CliError::Numerical(format!("{failed} of {total} fits failed")));
    }
    Ok(())
}

fn fig1(args: &ReproArgs, out: &Path, recorder: &mut ManifestRecorder) -> Result<(), CliError> {
    // start value fixed at 1, asymptotic mean varies around it
    const DT: f64 = 1e-3;
    const HORIZON: f64 = 100.0;
    let scenarios = [
        ("mean-far-below", 0.1, 0.5),
        ("mean-near-start", 0.475, 0.5),
        ("mean-above", 1.0, 0.5),
    ];
    let sigma = 0.03;
    let alpha = 0.5;
    let horizons: Vec<f64> = (1..=50).map(|i| 2.0 * i as f64).collect();

    let rows: Vec<(usize, Vec<(f64, ckls::estimate::FitResult)>)> = scenarios
        .par_iter()
        .enumerate()
        .map(|(idx, (_, beta1, beta2))| {
            let p = CklsParams::new(*beta1, *beta2, sigma, alpha, 1.0).expect("valid scenario");
            let cfg = SimConfig::new(HORIZON, DT, args.seed)
                .expect("valid config")
                .with_stream(idx as u64);
            let path = simulate_ckls(&p, &cfg).expect("scenario simulation");
            let fits = horizons
                .iter()
                .map(|&t| {
                    let fit = fit_path(&path.prefix(t).expect("prefix"), alpha)
                        .expect("scenario fit");
                    (t, fit)
                })
                .collect();
            (idx, fits)
        })
        .collect();

    let mut csv = String::from(
        "scenario,theta_true,kappa_true,sigma2_true,T,theta_hat,kappa_hat,sigma2_hat\n",
    );
    let mut theta_series = Vec::new();
    let mut kappa_series = Vec::new();
    let mut sigma2_series = Vec::new();
    for (idx, fits) in &rows {
        let (name, beta1, beta2) = scenarios[*idx];
        let theta_true = beta1 / beta2;
        for (t, fit) in fits {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                name,
                format_float(theta_true),
                format_float(beta2),
                format_float(sigma * sigma),
                t,
                format_float(fit.beta1_hat / fit.beta2_hat),
                format_float(fit.beta2_hat),
                format_float(fit.sigma2_hat),
            ));
        }
        let label = format!("{name} (theta {theta_true})");
        theta_series.push(Series {
            label: label.clone(),
            points: fits.iter().map(|(t, f)| (*t, f.beta1_hat / f.beta2_hat)).collect(),
        });
        kappa_series.push(Series {
            label: label.clone(),
            points: fits.iter().map(|(t, f)| (*t, f.beta2_hat)).collect(),
        });
        sigma2_series.push(Series {
            label,
            points: fits.iter().map(|(t, f)| (*t, f.sigma2_hat)).collect(),
        });
    }
    fs::write(out.join("fig1.csv"), csv)?;
    recorder.add_output("fig1.csv");

    let theta_rules: Vec<f64> = scenarios.iter().map(|(_, b1, b2)| b1 / b2).collect();
    fs::write(
        out.join("fig1_theta.svg"),
        line_chart("estimate of the asymptotic mean", "T", "theta", &theta_series, &theta_rules),
    )?;
    recorder.add_output("fig1_theta.svg");
    fs::write(
        out.join("fig1_kappa.svg"),
        line_chart("estimate of the reversion speed", "T", "kappa", &kappa_series, &[0.5]),
    )?;
    recorder.add_output("fig1_kappa.svg");
    fs::write(
        out.join("fig1_sigma2.svg"),
        line_chart(
            "estimate of the squared volatility",
            "T",
            "sigma^2",
            &sigma2_series,
            &[sigma * sigma],
        ),
    )?;
    recorder.add_output("fig1_sigma2.svg");
    emit(&format!("fig1: {} scenarios x {} horizons", scenarios.len(), horizons.len()));
    Ok(())
}

fn fig2(args: &ReproArgs, out: &Path, recorder: &mut ManifestRecorder) -> Result<(), CliError> {
    const DT: f64 = 1e-3;
    const PATHS: usize = 2000;
    let template = PARAMETER_BLOCKS[0].params();
    let mu = template.mu();
    let alphas = [0.5, 0.6, 0.8, 1.0];
    let r0_grid: Vec<f64> = [1.5, 2.0, 3.0, 5.0, 10.0, 20.0].iter().map(|m| m * mu).collect();
    let t_max = 50.0 / template.beta2();
    let cfg = SimConfig::new(t_max, DT, args.seed).expect("valid config");
    let cells = ratio_sweep(&template, &r0_grid, &alphas, PATHS, &cfg, t_max)
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut csv = String::from("alpha,r0,t_half,expected_tau,tau_se,ratio,n,censored\n");
    let mut failed = 0usize;
    let mut series: Vec<Series> = alphas
        .iter()
        .map(|a| Series { label: format!("alpha {a}"), points: Vec::new() })
        .collect();
    for cell in &cells {
        match &cell.outcome {
            Ok(r) => {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    format_float(cell.alpha),
                    format_float(cell.r0),
                    format_float(r.t_half_deterministic),
                    format_float(r.expected_tau),
                    format_float(r.tau_std_error),
                    format_float(r.ratio),
                    r.n_paths,
                    r.censored
                ));
                let idx = alphas.iter().position(|a| *a == cell.alpha).unwrap();
                series[idx].points.push((cell.r0, r.ratio));
            }
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
    fs::write(out.join("fig2.csv"), csv)?;
    recorder.add_output("fig2.csv");
    fs::write(
        out.join("fig2.svg"),
        line_chart(
            "deterministic half-life over expected passage time",
            "r0",
            "ratio",
            &series,
            &[1.0],
        ),
    )?;
    recorder.add_output("fig2.svg");
    emit(&format!("fig2: {} cells, {} failed", cells.len(), failed));
    if failed * 10 > cells.len() {
        return Err(CliError::Numerical(format!(
            "{failed} of {} cells failed",
            cells.len()
        )));
    }
    Ok(())
}
