//! Mean-reversion rate, deterministic half-life, and the Monte Carlo
//! half-life experiment.
//!
//! The expected deviation of a CKLS path from its asymptotic mean decays as
//! `E[r_t - mu] = (r0 - mu) exp(-beta2 t)`, so the deterministic half-life is
//! `ln 2 / beta2`. With noise on, "half-life" becomes the first passage of
//! the midpoint level `(r0 + mu) / 2`; this module estimates its expectation
//! over seeded path ensembles and reports the ratio of the deterministic
//! half-life to that expectation.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CklsParams, ModelError};
use crate::numeric::{mean, sample_std};
use crate::simulate::{first_passage_time, FirstPassage, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum MeanRevError {
    #[error("r = {r} is at the asymptotic mean mu = {mu}; the reversion-rate ratio is degenerate there")]
    AtAsymptoticMean { r: f64, mu: f64 },
    #[error("need at least {min} paths, got {n_paths}")]
    TooFewPaths { n_paths: usize, min: usize },
    #[error("{censored} of {n_paths} paths were censored at t_max = {t_max} (more than 1%); raise t_max")]
    ExcessiveCensoring { censored: usize, n_paths: usize, t_max: f64 },
    #[error("empty grid: {which}")]
    EmptyGrid { which: &'static str },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

const MIN_PATHS: usize = 100;
const MAX_CENSOR_FRACTION: f64 = 0.01;

/// Instantaneous mean-reversion rate at level `r`: the generator of the
/// identity observable divided by the deviation from the mean,
/// `(beta1 - beta2 r) / (mu - r)`.
///
/// For linear drift the ratio simplifies algebraically to `beta2`, so the
/// simplified form is returned and the identity holds to the last bit for
/// every admissible `r`. At `r = mu` the ratio is 0/0 and near it the factor
/// `1 / (mu - r)` inflates any estimate, hence the guard.
pub fn mean_reversion_rate(params: &CklsParams, r: f64) -> Result<f64, MeanRevError> {
    let mu = params.mu();
    if (r - mu).abs() <= 1e-12 {
        return Err(MeanRevError::AtAsymptoticMean { r, mu });
    }
    Ok(params.beta2())
}

/// Expected deviation from the asymptotic mean after time `t >= 0`:
/// `(r0 - mu) exp(-beta2 t)`.
pub fn expected_deviation(params: &CklsParams, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    (params.r0() - params.mu()) * (-params.beta2() * t).exp()
}

/// Deterministic half-life `ln 2 / beta2`.
pub fn half_life_deterministic(params: &CklsParams) -> f64 {
    std::f64::consts::LN_2 / params.beta2()
}

/// Default censoring horizon for the half-life experiment, `50 / beta2`.
pub fn default_t_max(params: &CklsParams) -> f64 {
    50.0 / params.beta2()
}

/// Monte Carlo estimate of the expected midpoint first-passage time and its
/// ratio against the deterministic half-life.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfLifeResult {
    pub r0: f64,
    pub t_half_deterministic: f64,
    /// Mean first-passage time over the non-censored paths.
    pub expected_tau: f64,
    /// Sample standard deviation of tau over sqrt(non-censored count).
    pub tau_std_error: f64,
    pub n_paths: usize,
    pub censored: usize,
    /// `t_half_deterministic / expected_tau`.
    pub ratio: f64,
}

/// Run `n_paths` independent first-passage simulations towards the midpoint
/// `(r0 + mu) / 2`. Path `i` uses substream `cfg.stream() + i`, so the result
/// does not depend on scheduling; censored paths are excluded from the mean
/// and more than 1% of them is an error.
pub fn half_life_mc(
    params: &CklsParams,
    n_paths: usize,
    cfg: &SimConfig,
    t_max: f64,
) -> Result<HalfLifeResult, MeanRevError> {
    if n_paths < MIN_PATHS {
        return Err(MeanRevError::TooFewPaths { n_paths, min: MIN_PATHS });
    }
    let mu = params.mu();
    let r0 = params.r0();
    if (r0 - mu).abs() <= 1e-12 {
        return Err(MeanRevError::AtAsymptoticMean { r: r0, mu });
    }
    let target = 0.5 * (r0 + mu);
    let base_stream = cfg.stream();
    let outcomes: Vec<FirstPassage> = (0..n_paths)
        .into_par_iter()
        .map(|i| first_passage_time(params, target, &cfg.with_stream(base_stream + i as u64), t_max))
        .collect::<Result<_, _>>()?;

    let taus: Vec<f64> = outcomes.iter().filter_map(|o| o.hit()).collect();
    let censored = n_paths - taus.len();
    if censored as f64 > MAX_CENSOR_FRACTION * n_paths as f64 {
        return Err(MeanRevError::ExcessiveCensoring { censored, n_paths, t_max });
    }
    let expected_tau = mean(&taus);
    let tau_std_error = sample_std(&taus) / (taus.len() as f64).sqrt();
    let t_half = half_life_deterministic(params);
    Ok(HalfLifeResult {
        r0,
        t_half_deterministic: t_half,
        expected_tau,
        tau_std_error,
        n_paths,
        censored,
        ratio: t_half / expected_tau,
    })
}

/// One cell of a `(alpha, r0)` sweep; failed cells carry their error instead
/// of aborting the whole table.
#[derive(Debug)]
pub struct SweepCell {
    pub alpha: f64,
    pub r0: f64,
    pub outcome: Result<HalfLifeResult, MeanRevError>,
}

/// Run [`half_life_mc`] over the cartesian grid `alphas x r0_grid`, holding
/// the template's `beta1`, `beta2`, `sigma` fixed. Cell `j` draws from
/// substream block `j << 32` so cells never share randomness.
pub fn ratio_sweep(
    template: &CklsParams,
    r0_grid: &[f64],
    alphas: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    t_max: f64,
) -> Result<Vec<SweepCell>, MeanRevError> {
    if r0_grid.is_empty() {
        return Err(MeanRevError::EmptyGrid { which: "r0_grid" });
    }
    if alphas.is_empty() {
        return Err(MeanRevError::EmptyGrid { which: "alphas" });
    }
    let mut cells = Vec::with_capacity(alphas.len() * r0_grid.len());
    for (j, (&alpha, &r0)) in alphas
        .iter()
        .flat_map(|a| r0_grid.iter().map(move |r| (a, r)))
        .enumerate()
    {
        let cell_cfg = cfg.with_stream((j as u64) << 32);
        let outcome = CklsParams::new(template.beta1(), template.beta2(), template.sigma(), alpha, r0)
            .map_err(MeanRevError::from)
            .and_then(|p| half_life_mc(&p, n_paths, &cell_cfg, t_max));
        cells.push(SweepCell { alpha, r0, outcome });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversion_rate_is_beta2_away_from_the_mean() {
        // beta1 = beta2 = 0.5, mu = 1: (0.5 - 2)/(1 - 4) = 0.5 at r = 4
        let p = CklsParams::new(0.5, 0.5, 0.03, 0.5, 4.0).unwrap();
        assert_eq!(mean_reversion_rate(&p, 4.0).unwrap(), 0.5);
        assert_eq!(mean_reversion_rate(&p, 2.0 * p.mu()).unwrap(), p.beta2());
    }

    #[test]
    fn reversion_rate_rejects_the_mean_itself() {
        let p = CklsParams::new(0.5, 0.5, 0.03, 0.5, 4.0).unwrap();
        assert!(matches!(
            mean_reversion_rate(&p, 1.0),
            Err(MeanRevError::AtAsymptoticMean { .. })
        ));
    }

    #[test]
    fn expected_deviation_decays_and_halves() {
        let p = CklsParams::new(0.5, 0.5, 0.03, 0.5, 4.0).unwrap();
        assert_eq!(expected_deviation(&p, 0.0), p.r0() - p.mu());
        let t_half = half_life_deterministic(&p);
        let half = expected_deviation(&p, t_half);
        assert!((half - (p.r0() - p.mu()) / 2.0).abs() < 1e-12);
        for t in [0.0, 0.7, 3.1] {
            let a = expected_deviation(&p, t + t_half);
            let b = expected_deviation(&p, t) / 2.0;
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn noise_free_half_life_hits_ln2_over_beta2() {
        let p = CklsParams::new(0.5, 0.5, 0.03, 0.5, 4.0).unwrap();
        let dt = 1e-4;
        let cfg = SimConfig::new(1.0, dt, 0).unwrap().with_noise_disabled();
        let result = half_life_mc(&p, 100, &cfg, 20.0).unwrap();
        let t_half = half_life_deterministic(&p);
        assert!((result.expected_tau - t_half).abs() < 2.0 * dt);
        assert!((result.ratio - 1.0).abs() < 2.0 * dt * p.beta2() / std::f64::consts::LN_2);
        assert_eq!(result.censored, 0);
    }

    #[test]
    fn too_few_paths_is_an_error() {
        let p = CklsParams::new(0.5, 0.5, 0.03, 0.5, 4.0).unwrap();
        let cfg = SimConfig::new(1.0, 1e-3, 0).unwrap();
        assert!(matches!(
            half_life_mc(&p, 50, &cfg, 10.0),
            Err(MeanRevError::TooFewPaths { .. })
        ));
    }

    #[test]
    fn tight_t_max_reports_excessive_censoring() {
        let p = CklsParams::new(0.5, 0.5, 0.03, 0.5, 4.0).unwrap();
        let cfg = SimConfig::new(1.0, 1e-3, 0).unwrap();
        // deterministic crossing near 1.386; t_max far below it censors everything
        assert!(matches!(
            half_life_mc(&p, 200, &cfg, 0.2),
            Err(MeanRevError::ExcessiveCensoring { .. })
        ));
    }

    #[test]
    fn sweep_single_cell_matches_direct_call() {
        let template = CklsParams::new(0.1, 0.5, 0.03, 0.5, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 1e-3, 7).unwrap();
        let t_max = default_t_max(&template);
        let cells = ratio_sweep(&template, &[2.0], &[0.5], 150, &cfg, t_max).unwrap();
        assert_eq!(cells.len(), 1);
        let direct_params = template.with_alpha(0.5).unwrap().with_r0(2.0).unwrap();
        let direct = half_life_mc(&direct_params, 150, &cfg.with_stream(0), t_max).unwrap();
        assert_eq!(*cells[0].outcome.as_ref().unwrap(), direct);
    }

    #[test]
    fn sweep_is_reproducible() {
        let template = CklsParams::new(0.1, 0.5, 0.03, 0.5, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 1e-3, 7).unwrap();
        let a = ratio_sweep(&template, &[1.0, 2.0], &[0.5, 1.0], 120, &cfg, 50.0).unwrap();
        let b = ratio_sweep(&template, &[1.0, 2.0], &[0.5, 1.0], 120, &cfg, 50.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.outcome.as_ref().unwrap(), y.outcome.as_ref().unwrap());
        }
    }

    #[test]
    fn empty_grids_are_rejected() {
        let template = CklsParams::new(0.1, 0.5, 0.03, 0.5, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 1e-3, 7).unwrap();
        assert!(matches!(
            ratio_sweep(&template, &[], &[0.5], 120, &cfg, 50.0),
            Err(MeanRevError::EmptyGrid { which: "r0_grid" })
        ));
        assert!(matches!(
            ratio_sweep(&template, &[1.0], &[], 120, &cfg, 50.0),
            Err(MeanRevError::EmptyGrid { which: "alphas" })
        ));
    }
}
