//! Regression-based estimation of the drift pair and volatility scale.
//!
//! An Euler step of the CKLS SDE, rescaled by `r_t^alpha * sqrt(dt)`, is an
//! exact linear model
//!
//! ```text
//! y_t = beta1 z1_t + beta2 z2_t + sigma * N(0, 1)
//! y_t  = (r_{t+dt} - r_t) / (r_t^alpha sqrt(dt))
//! z1_t = sqrt(dt) / r_t^alpha
//! z2_t = -r_t^(1-alpha) sqrt(dt)
//! ```
//!
//! so ordinary least squares on `(y, z1, z2)` recovers `(beta1, beta2)` in
//! closed form and the mean squared residual estimates `sigma^2`. The
//! asymptotic covariance of the scaled estimation error is `sigma^2 *
//! inverse(Sigma)` with `Sigma` either in closed form (`alpha = 1/2`) or as
//! stationary-moment integrals (general `alpha`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CklsParams, SamplePath};
use crate::numeric::compensated_sum;
use crate::stationary::{DensityError, StationaryDensity};

/// States at or below this floor are excluded from the design; the transform
/// divides by `r_t^alpha`.
pub const STATE_FLOOR: f64 = 1e-10;

/// Fraction of steps that may be dropped before the path is rejected.
pub const MAX_DROP_FRACTION: f64 = 0.05;

const MIN_USABLE_STEPS: usize = 10;
const MAX_CONDITION: f64 = 1e12;
const NORMAL_95: f64 = 1.96;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("alpha must lie in [0.5, 1], got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("only {used} usable steps; need at least {MIN_USABLE_STEPS}")]
    TooFewUsableSteps { used: usize },
    #[error("{dropped} of {total} steps fell below the state floor (more than {MAX_DROP_FRACTION:.0}%); the path is pathological")]
    ExcessiveDropping { dropped: usize, total: usize },
    #[error("regression design is numerically singular (condition number {condition:.3e}); the path barely varies")]
    SingularDesign { condition: f64 },
    #[error("Feller condition fails: need 2 beta1 > sigma^2, got beta1 = {beta1}, sigma^2 = {sigma2}")]
    FellerViolated { beta1: f64, sigma2: f64 },
    #[error("stationary moment of order {power} diverges")]
    MomentDiverges { power: f64 },
    #[error("covariance matrix is not positive definite (det = {det:.3e})")]
    NotPositiveDefinite { det: f64 },
    #[error("plug-in covariance unavailable: {0}")]
    CovarianceUnavailable(String),
    #[error(transparent)]
    Density(DensityError),
}

impl From<DensityError> for FitError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::FellerViolated { beta1, sigma2 } => {
                FitError::FellerViolated { beta1, sigma2 }
            }
            DensityError::MomentDiverges { power } => FitError::MomentDiverges { power },
            other => FitError::Density(other),
        }
    }
}

/// The transformed observations `(y, z1, z2)` with drop accounting.
#[derive(Clone, Debug)]
pub struct RegressionDesign {
    y: Vec<f64>,
    z1: Vec<f64>,
    z2: Vec<f64>,
    dropped: usize,
    dt: f64,
    alpha: f64,
}

impl RegressionDesign {
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z1(&self) -> &[f64] {
        &self.z1
    }

    pub fn z2(&self) -> &[f64] {
        &self.z2
    }

    pub fn n_used(&self) -> usize {
        self.y.len()
    }

    pub fn n_dropped(&self) -> usize {
        self.dropped
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Estimates with their sampling-noise summary.
///
/// `cov` is row-major `[c11, c12, c21, c22]`: the covariance of
/// `(beta1_hat, beta2_hat)` built as `sigma2_hat * inverse(Z'Z)`, i.e. the
/// asymptotic covariance with the moment matrix estimated by the observed
/// Gram matrix `Z'Z / T`. The `ci95` intervals are the matching normal
/// intervals. Plugging fitted parameters into the stationary-limit matrix
/// instead (see [`asymptotic_covariance`]) badly overstates the variance at
/// moderate horizons whenever the start value sits away from the mean,
/// because most of the information then comes from the transient; the
/// observed Gram matrix prices that in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub beta1_hat: f64,
    pub beta2_hat: f64,
    pub sigma_hat: f64,
    pub sigma2_hat: f64,
    pub n_used: usize,
    pub n_dropped: usize,
    #[serde(rename = "T")]
    pub t_horizon: f64,
    pub dt: f64,
    pub alpha: f64,
    pub cov: [f64; 4],
    pub ci95_beta1: [f64; 2],
    pub ci95_beta2: [f64; 2],
}

fn check_alpha(alpha: f64) -> Result<(), FitError> {
    if !alpha.is_finite() || !(0.5..=1.0).contains(&alpha) {
        return Err(FitError::AlphaOutOfRange { alpha });
    }
    Ok(())
}

/// Transform a path into the regression design, dropping steps whose state
/// sits at or below [`STATE_FLOOR`].
pub fn build_design(path: &SamplePath, alpha: f64) -> Result<RegressionDesign, FitError> {
    check_alpha(alpha)?;
    let values = path.values();
    if values.len() < 3 {
        return Err(FitError::TooFewUsableSteps {
            used: values.len().saturating_sub(1),
        });
    }
    let dt = path.dt();
    let sqrt_dt = dt.sqrt();
    let total = values.len() - 1;
    let mut y = Vec::with_capacity(total);
    let mut z1 = Vec::with_capacity(total);
    let mut z2 = Vec::with_capacity(total);
    let mut dropped = 0usize;
    for w in values.windows(2) {
        let (r, r_next) = (w[0], w[1]);
        if r <= STATE_FLOOR {
            dropped += 1;
            continue;
        }
        let r_alpha = r.powf(alpha);
        y.push((r_next - r) / (r_alpha * sqrt_dt));
        z1.push(sqrt_dt / r_alpha);
        z2.push(-(r / r_alpha) * sqrt_dt);
    }
    if y.len() < MIN_USABLE_STEPS {
        return Err(FitError::TooFewUsableSteps { used: y.len() });
    }
    if dropped as f64 > MAX_DROP_FRACTION * total as f64 {
        return Err(FitError::ExcessiveDropping { dropped, total });
    }
    Ok(RegressionDesign { y, z1, z2, dropped, dt, alpha })
}

/// Closed form of the asymptotic regression matrix for `alpha = 1/2`:
/// `Sigma = [[beta2 / (beta1 - sigma^2/2), -1], [-1, beta1 / beta2]]`.
///
/// Requires the Feller condition `2 beta1 > sigma^2`, which keeps the
/// inverse-moment entry finite.
pub fn sigma_matrix_closed_form(
    beta1: f64,
    beta2: f64,
    sigma2: f64,
) -> Result<[[f64; 2]; 2], FitError> {
    if 2.0 * beta1 <= sigma2 {
        return Err(FitError::FellerViolated { beta1, sigma2 });
    }
    Ok([
        [beta2 / (beta1 - sigma2 / 2.0), -1.0],
        [-1.0, beta1 / beta2],
    ])
}

/// Asymptotic covariance `sigma^2 * inverse(Sigma)` of the scaled error
/// `sqrt(T) (beta_hat - beta)`, evaluated at the supplied parameters.
///
/// `sigma2` is used both inside `Sigma` and as the outer scale, so plugging
/// in estimates amounts to passing the fitted parameters and `sigma2_hat`.
/// For `alpha = 1/2` the matrix is closed-form; otherwise the entries are
/// stationary-density moments computed by quadrature.
pub fn asymptotic_covariance(
    params: &CklsParams,
    sigma2: f64,
) -> Result<[[f64; 2]; 2], FitError> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(FitError::CovarianceUnavailable(format!(
            "sigma^2 must be nonnegative and finite, got {sigma2}"
        )));
    }
    if params.alpha() == 0.5 {
        // det(Sigma) = (sigma^2/2)/(beta1 - sigma^2/2), so sigma^2 cancels in
        // sigma^2 inverse(Sigma); this form stays finite even at sigma^2 = 0
        let beta1 = params.beta1();
        let beta2 = params.beta2();
        let half = beta1 - sigma2 / 2.0;
        if half <= 0.0 {
            return Err(FitError::FellerViolated { beta1, sigma2 });
        }
        let scale = 2.0 * half;
        return Ok([
            [scale * beta1 / beta2, scale],
            [scale, 2.0 * beta2],
        ]);
    }
    let sigma_matrix = {
        if sigma2 == 0.0 {
            return Err(FitError::CovarianceUnavailable(
                "sigma^2 = 0 has no stationary density for alpha > 1/2".into(),
            ));
        }
        let density_params = CklsParams::new(
            params.beta1(),
            params.beta2(),
            sigma2.sqrt(),
            params.alpha(),
            params.r0(),
        )
        .map_err(|e| FitError::CovarianceUnavailable(e.to_string()))?;
        let density = StationaryDensity::build(&density_params, 1e-12)?;
        density.sigma_matrix()?
    };
    invert_scaled(sigma_matrix, sigma2)
}

fn invert_scaled(m: [[f64; 2]; 2], scale: f64) -> Result<[[f64; 2]; 2], FitError> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0) || !det.is_finite() {
        return Err(FitError::NotPositiveDefinite { det });
    }
    Ok([
        [scale * m[1][1] / det, -scale * m[0][1] / det],
        [-scale * m[1][0] / det, scale * m[0][0] / det],
    ])
}

/// Solve the normal equations in closed form and attach the plug-in
/// covariance and 95% intervals.
pub fn fit(design: &RegressionDesign) -> Result<FitResult, FitError> {
    let n = design.n_used();
    let s11 = compensated_sum(design.z1.iter().map(|a| a * a));
    let s12 = compensated_sum(design.z1.iter().zip(&design.z2).map(|(a, b)| a * b));
    let s22 = compensated_sum(design.z2.iter().map(|b| b * b));
    let b1 = compensated_sum(design.z1.iter().zip(&design.y).map(|(a, y)| a * y));
    let b2 = compensated_sum(design.z2.iter().zip(&design.y).map(|(b, y)| b * y));

    // 2x2 symmetric Gram matrix: eigenvalue ratio as the condition number
    let trace = s11 + s22;
    let disc = ((s11 - s22) * (s11 - s22) + 4.0 * s12 * s12).sqrt();
    let lambda_max = 0.5 * (trace + disc);
    let lambda_min = 0.5 * (trace - disc);
    let condition = lambda_max / lambda_min;
    if !(lambda_min > 0.0) || !condition.is_finite() || condition > MAX_CONDITION {
        return Err(FitError::SingularDesign { condition });
    }

    let det = s11 * s22 - s12 * s12;
    let beta1_hat = (s22 * b1 - s12 * b2) / det;
    let beta2_hat = (s11 * b2 - s12 * b1) / det;

    let rss = compensated_sum(
        design
            .y
            .iter()
            .zip(&design.z1)
            .zip(&design.z2)
            .map(|((y, z1), z2)| {
                let r = y - beta1_hat * z1 - beta2_hat * z2;
                r * r
            }),
    );
    let sigma2_hat = rss / n as f64;
    let sigma_hat = sigma2_hat.sqrt();
    let t_horizon = n as f64 * design.dt;

    // sigma2_hat * inverse(Z'Z), the observed-information covariance
    let cov = [
        sigma2_hat * s22 / det,
        -sigma2_hat * s12 / det,
        -sigma2_hat * s12 / det,
        sigma2_hat * s11 / det,
    ];
    let half1 = NORMAL_95 * cov[0].sqrt();
    let half2 = NORMAL_95 * cov[3].sqrt();

    Ok(FitResult {
        beta1_hat,
        beta2_hat,
        sigma_hat,
        sigma2_hat,
        n_used: n,
        n_dropped: design.dropped,
        t_horizon,
        dt: design.dt,
        alpha: design.alpha,
        cov,
        ci95_beta1: [beta1_hat - half1, beta1_hat + half1],
        ci95_beta2: [beta2_hat - half2, beta2_hat + half2],
    })
}

/// Build the design and fit it in one call.
pub fn fit_path(path: &SamplePath, alpha: f64) -> Result<FitResult, FitError> {
    fit(&build_design(path, alpha)?)
}

impl FitResult {
    /// Residual orthogonality against both regressors, relative to the
    /// magnitude of the summed products. Diagnostics for the normal
    /// equations; near zero for any exact solve.
    pub fn orthogonality_residual(&self, design: &RegressionDesign) -> (f64, f64) {
        let mut dot1 = 0.0;
        let mut mag1 = 0.0;
        let mut dot2 = 0.0;
        let mut mag2 = 0.0;
        for ((y, z1), z2) in design.y.iter().zip(&design.z1).zip(&design.z2) {
            let r = y - self.beta1_hat * z1 - self.beta2_hat * z2;
            dot1 += r * z1;
            mag1 += (r * z1).abs();
            dot2 += r * z2;
            mag2 += (r * z2).abs();
        }
        (dot1.abs() / mag1.max(f64::MIN_POSITIVE), dot2.abs() / mag2.max(f64::MIN_POSITIVE))
    }
}

