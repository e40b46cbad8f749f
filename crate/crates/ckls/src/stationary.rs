//! Stationary densities of the CKLS family and their moment integrals.
//!
//! The ergodic law has the form `f(r) = C(alpha) r^(-2 alpha) exp(Q(r))` on
//! `(0, inf)`, where the exponent takes one of three shapes:
//!
//! ```text
//! alpha = 1/2:        Q(r) = (2 beta2 / sigma^2) ((beta1/beta2) ln r - r)
//! 1/2 < alpha < 1:    Q(r) = (2 beta2 / sigma^2) (beta1 r^(1-2a) / (beta2 (1-2a))
//!                                                 - r^(2-2a) / (2-2a))
//! alpha = 1:          Q(r) = (2 beta2 / sigma^2) (-beta1 / (beta2 r) - ln r)
//! ```
//!
//! For `alpha = 1/2` the law is a Gamma distribution and existence requires
//! `2 beta1 > sigma^2`; for `alpha = 1` it is Inverse-Gamma. `Q` values are
//! routinely of order `-10^3`, so every computation here stays in log space
//! until the final exponentiation.

use thiserror::Error;

use crate::model::CklsParams;
use crate::quadrature::{
    integrate_halfline_log_scaled, integrate_lower_tail_log_scaled, QuadError,
};

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("Feller condition fails: need 2 beta1 > sigma^2, got beta1 = {beta1}, sigma^2 = {sigma2}")]
    FellerViolated { beta1: f64, sigma2: f64 },
    #[error("quadrature failed: {detail}")]
    QuadratureFailure { detail: String },
    #[error("stationary moment of order {power} diverges")]
    MomentDiverges { power: f64 },
    #[error("tolerance must be positive and finite, got {tol}")]
    InvalidTolerance { tol: f64 },
}

/// Which branch of the exponent applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QBranch {
    AlphaHalf,
    AlphaInterior,
    AlphaOne,
}

pub fn branch_for(alpha: f64) -> QBranch {
    if alpha == 0.5 {
        QBranch::AlphaHalf
    } else if alpha == 1.0 {
        QBranch::AlphaOne
    } else {
        QBranch::AlphaInterior
    }
}

/// Exponent `Q(r; alpha)` of the stationary density, for `r > 0`.
///
/// The interior branch diverges termwise as `alpha -> 1/2`; only differences
/// `Q(r) - Q(r')` stay continuous across branches, which is all the density
/// needs since constants are absorbed into the normalization.
pub fn q_exponent(params: &CklsParams, r: f64) -> f64 {
    let scale = 2.0 * params.beta2() / (params.sigma() * params.sigma());
    match branch_for(params.alpha()) {
        QBranch::AlphaHalf => scale * (params.mu() * r.ln() - r),
        QBranch::AlphaOne => scale * (-(params.mu() / r) - r.ln()),
        QBranch::AlphaInterior => {
            let a = params.alpha();
            let p1 = 1.0 - 2.0 * a;
            let p2 = 2.0 - 2.0 * a;
            scale * (params.beta1() * r.powf(p1) / (params.beta2() * p1) - r.powf(p2) / p2)
        }
    }
}

/// A normalized stationary density, ready for pointwise evaluation.
#[derive(Clone, Debug)]
pub struct StationaryDensity {
    params: CklsParams,
    log_norm_const: f64,
    branch: QBranch,
    quadrature_tol: f64,
}

fn map_quad(e: QuadError, power: Option<f64>) -> DensityError {
    match (e, power) {
        (QuadError::DivergentTail { .. }, Some(power)) => DensityError::MomentDiverges { power },
        (other, _) => DensityError::QuadratureFailure {
            detail: other.to_string(),
        },
    }
}

impl StationaryDensity {
    /// Normalize the density by quadrature at relative tolerance `tol`.
    pub fn build(params: &CklsParams, tol: f64) -> Result<Self, DensityError> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(DensityError::InvalidTolerance { tol });
        }
        let sigma2 = params.sigma() * params.sigma();
        if params.alpha() == 0.5 && 2.0 * params.beta1() <= sigma2 {
            return Err(DensityError::FellerViolated {
                beta1: params.beta1(),
                sigma2,
            });
        }
        let p = *params;
        let result =
            integrate_halfline_log_scaled(move |r| ln_unnormalized(&p, r), params.mu(), tol)
                .map_err(|e| map_quad(e, None))?;
        if !result.converged {
            return Err(DensityError::QuadratureFailure {
                detail: format!(
                    "normalization integral did not converge (relative error {:.3e})",
                    result.rel_error_estimate
                ),
            });
        }
        Ok(Self {
            params: *params,
            log_norm_const: -result.ln_value,
            branch: branch_for(params.alpha()),
            quadrature_tol: tol,
        })
    }

    pub fn params(&self) -> &CklsParams {
        &self.params
    }

    /// `ln C(alpha)`.
    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    pub fn branch(&self) -> QBranch {
        self.branch
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    /// Log density; `-inf` outside `(0, inf)`.
    pub fn ln_pdf(&self, r: f64) -> f64 {
        if r <= 0.0 || !r.is_finite() {
            return f64::NEG_INFINITY;
        }
        ln_unnormalized(&self.params, r) + self.log_norm_const
    }

    pub fn pdf(&self, r: f64) -> f64 {
        self.ln_pdf(r).exp()
    }

    /// `E[r^power]` under the stationary law, via quadrature split at the
    /// asymptotic mean.
    pub fn moment(&self, power: f64) -> Result<f64, DensityError> {
        self.moment_with_split(power, self.params.mu())
    }

    /// Same integral on a grid anchored at a caller-chosen split point;
    /// useful as an independent re-quadrature.
    pub fn moment_with_split(&self, power: f64, split: f64) -> Result<f64, DensityError> {
        let p = self.params;
        let result = integrate_halfline_log_scaled(
            move |r| power * r.ln() + ln_unnormalized(&p, r),
            split,
            self.quadrature_tol,
        )
        .map_err(|e| map_quad(e, Some(power)))?;
        if !result.converged {
            return Err(DensityError::QuadratureFailure {
                detail: format!("moment({power}) integral did not converge"),
            });
        }
        Ok((result.ln_value + self.log_norm_const).exp())
    }

    /// The symmetric moment matrix
    /// `[[E r^(-2a), -E r^(1-2a)], [-E r^(1-2a), E r^(2-2a)]]`
    /// that scales the asymptotic covariance of the regression estimator.
    pub fn sigma_matrix(&self) -> Result<[[f64; 2]; 2], DensityError> {
        let a = self.params.alpha();
        let m11 = self.moment(-2.0 * a)?;
        let m12 = self.moment(1.0 - 2.0 * a)?;
        let m22 = self.moment(2.0 - 2.0 * a)?;
        Ok([[m11, -m12], [-m12, m22]])
    }

    /// `P(r <= x)` by quadrature over `(0, x]`.
    pub fn cdf(&self, x: f64) -> Result<f64, DensityError> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let p = self.params;
        let result = integrate_lower_tail_log_scaled(
            &move |r: f64| ln_unnormalized(&p, r),
            x,
            self.quadrature_tol,
        )
        .map_err(|e| map_quad(e, None))?;
        Ok((result.ln_value + self.log_norm_const).exp().min(1.0))
    }
}

/// Free-function form of [`StationaryDensity::build`].
pub fn build_density(params: &CklsParams, tol: f64) -> Result<StationaryDensity, DensityError> {
    StationaryDensity::build(params, tol)
}

fn ln_unnormalized(params: &CklsParams, r: f64) -> f64 {
    -2.0 * params.alpha() * r.ln() + q_exponent(params, r)
}
