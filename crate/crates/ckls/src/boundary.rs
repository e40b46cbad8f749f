//! Scale and speed densities for polynomial dynamics, and attainability
//! classification of the boundaries at 0 and infinity.
//!
//! For `dr = a(r) dt + b(r)^alpha dW` on `(0, inf)` the scale density is
//! `s(z) = exp(-int_{z0}^{z} 2 a(u) / b(u)^(2 alpha) du)` and the speed
//! density `m(u) = 1 / (b(u)^(2 alpha) s(u))`. Divergence of the integrated
//! scale density at an endpoint makes that boundary unattainable, and an
//! integrable speed density normalizes to the stationary law.
//!
//! The classifier encodes sufficient conditions only, so its negative answer
//! is `NotGuaranteed`, never "attainable":
//!
//! - infinity is unattainable when the leading-term limit of
//!   `2 a(u) / b(u)^(2 alpha)` is nonpositive;
//! - zero is unattainable when `b(0) = 0`, the lowest drift coefficient
//!   `c2 > 0`, and the lowest degrees satisfy `s + 1 <= k` with
//!   `2 c2 >= c1` in the equality case, where `k = 2 k1 alpha` and `c1`
//!   describe the leading behavior of `b^(2 alpha)` near zero;
//! - the stationary law exists when both boundaries are unattainable and
//!   the speed density has finite mass.

use serde::Serialize;
use thiserror::Error;

use crate::model::PolyDynamics;
use crate::quadrature::{integrate_finite, integrate_halfline_log_scaled, QuadError};

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("quadrature failed: {detail}")]
    QuadratureFailure { detail: String },
    #[error("stationary distribution does not exist for these dynamics (or is not guaranteed by the classifier)")]
    StationaryAbsent,
    #[error("evaluation point must be positive and finite, got {x}")]
    InvalidPoint { x: f64 },
    #[error("tolerance must be positive and finite, got {tol}")]
    InvalidTolerance { tol: f64 },
}

impl From<QuadError> for BoundaryError {
    fn from(e: QuadError) -> Self {
        BoundaryError::QuadratureFailure { detail: e.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Attainability {
    Unattainable,
    NotGuaranteed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StationaryExistence {
    Yes,
    NotGuaranteed,
}

/// Leading-term limit of `2 a(u) / b(u)^(2 alpha)` as `u -> inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InfinityLimit {
    NegativeConstant,
    MinusInfinity,
    Zero,
    Positive,
}

/// Total speed-density mass, up to the scale fixed by the anchor point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SpeedIntegral {
    Finite(f64),
    Diverged,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Diagnostics {
    /// Constant coefficient of the diffusion base.
    pub b0: f64,
    /// Lowest degree of the drift polynomial.
    pub s: usize,
    /// Lowest-order exponent of `b^(2 alpha)` near zero, `2 k1 alpha`.
    pub k: f64,
    /// Coefficient of that lowest-order term.
    pub c1: f64,
    /// Lowest drift coefficient.
    pub c2: f64,
    pub limit_ratio_at_infinity: InfinityLimit,
    pub speed_integral: SpeedIntegral,
    /// Set when `s + 1 = k` and `2 c2 = c1` up to tolerance: the boundary of
    /// the zero-unattainability condition, classified as unattainable here.
    pub zero_condition_marginal: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryReport {
    pub at_zero: Attainability,
    pub at_infinity: Attainability,
    pub stationary_exists: StationaryExistence,
    pub diagnostics: Diagnostics,
}

const DEGREE_TOL: f64 = 1e-12;
const SPEED_INTEGRAL_REL_TOL: f64 = 1e-8;

/// Drift-to-variance ratio integral `int_{z0}^{z} 2 a(u) / b(u)^(2 alpha) du`,
/// computed in the log variable `u = e^w` where the near-zero singularity of
/// the ratio flattens out.
fn ratio_integral(dynamics: &PolyDynamics, z: f64, z0: f64) -> Result<f64, BoundaryError> {
    if !z.is_finite() || z <= 0.0 {
        return Err(BoundaryError::InvalidPoint { x: z });
    }
    if !z0.is_finite() || z0 <= 0.0 {
        return Err(BoundaryError::InvalidPoint { x: z0 });
    }
    let (w_lo, w_hi) = (z.ln().min(z0.ln()), z.ln().max(z0.ln()));
    if w_hi - w_lo < 1e-308 {
        return Ok(0.0);
    }
    let integrand = |w: f64| {
        let u = w.exp();
        2.0 * dynamics.drift_at(u) * u / dynamics.diffusion_sq_at(u)
    };
    let rough = integrate_finite(integrand, w_lo, w_hi, 1.0)?;
    let tol = ((1.0 + rough.value.abs()) * 1e-12).max(5e-13);
    let result = integrate_finite(integrand, w_lo, w_hi, tol)?;
    if !result.converged {
        return Err(BoundaryError::QuadratureFailure {
            detail: format!(
                "ratio integral over [{z0}, {z}] did not converge (error {:.3e})",
                result.abs_error_estimate
            ),
        });
    }
    let oriented = if z >= z0 { result.value } else { -result.value };
    Ok(oriented)
}

/// `ln s(z)` with scale anchor `z0`.
pub fn ln_scale_density(dynamics: &PolyDynamics, z: f64, z0: f64) -> Result<f64, BoundaryError> {
    Ok(-ratio_integral(dynamics, z, z0)?)
}

/// `ln m(u)` with scale anchor `z0`:
/// `-2 alpha ln b(u) - ln s(u)`.
pub fn ln_speed_density(dynamics: &PolyDynamics, u: f64, z0: f64) -> Result<f64, BoundaryError> {
    if !u.is_finite() || u <= 0.0 {
        return Err(BoundaryError::InvalidPoint { x: u });
    }
    let base = dynamics.diffusion_base().eval(u);
    if base <= 0.0 {
        return Err(BoundaryError::InvalidPoint { x: u });
    }
    Ok(-2.0 * dynamics.alpha() * base.ln() + ratio_integral(dynamics, u, z0)?)
}

fn infinity_limit(dynamics: &PolyDynamics) -> InfinityLimit {
    let drift = dynamics.drift();
    let base = dynamics.diffusion_base();
    let deg_ratio = drift.degree() as f64 - 2.0 * dynamics.alpha() * base.degree() as f64;
    if deg_ratio > DEGREE_TOL {
        if drift.leading_coeff() > 0.0 {
            InfinityLimit::Positive
        } else {
            InfinityLimit::MinusInfinity
        }
    } else if deg_ratio < -DEGREE_TOL {
        InfinityLimit::Zero
    } else {
        let limit = 2.0 * drift.leading_coeff() / base.leading_coeff().powf(2.0 * dynamics.alpha());
        if limit < 0.0 {
            InfinityLimit::NegativeConstant
        } else {
            InfinityLimit::Positive
        }
    }
}

/// Anchor and split point for speed-density integrals: the coarse-grid
/// argmax of `ln m`, which is invariant under the choice of anchor.
fn speed_mode(dynamics: &PolyDynamics) -> f64 {
    let mut best_x = 1.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=240 {
        let x = 1e-6 * 10f64.powf(12.0 * i as f64 / 240.0);
        if let Ok(v) = ln_speed_density(dynamics, x, 1.0) {
            if v > best {
                best = v;
                best_x = x;
            }
        }
    }
    best_x
}

fn speed_mass(dynamics: &PolyDynamics, rel_tol: f64) -> Result<(f64, f64), BoundaryError> {
    let z0 = speed_mode(dynamics);
    let ln_m = |u: f64| ln_speed_density(dynamics, u, z0).unwrap_or(f64::NAN);
    let result = integrate_halfline_log_scaled(ln_m, z0, rel_tol)?;
    if !result.converged {
        return Err(BoundaryError::QuadratureFailure {
            detail: "speed-density mass did not converge".into(),
        });
    }
    Ok((z0, result.ln_value))
}

/// Classify both boundaries and decide whether the sufficient conditions for
/// a stationary law hold. `NotGuaranteed` is an answer, not an error.
pub fn classify(dynamics: &PolyDynamics) -> BoundaryReport {
    let drift = dynamics.drift();
    let base = dynamics.diffusion_base();
    let b0 = base.coeff(0);
    let s = drift.lowest_degree();
    let c2 = drift.lowest_coeff();
    let k = dynamics.diffusion_sq_lowest_degree();
    let c1 = dynamics.diffusion_sq_lowest_coeff();

    let limit = infinity_limit(dynamics);
    let at_infinity = match limit {
        InfinityLimit::Positive => Attainability::NotGuaranteed,
        _ => Attainability::Unattainable,
    };

    let s_plus_1 = (s + 1) as f64;
    let equality_case = (s_plus_1 - k).abs() <= DEGREE_TOL;
    let degree_ok = equality_case || s_plus_1 < k;
    let coeff_ok = c2 > 0.0 && (!equality_case || 2.0 * c2 >= c1);
    let at_zero = if b0 == 0.0 && degree_ok && coeff_ok {
        Attainability::Unattainable
    } else {
        Attainability::NotGuaranteed
    };
    let zero_condition_marginal =
        equality_case && (2.0 * c2 - c1).abs() <= 1e-12 * c1.abs().max(1e-300);

    let speed_integral = match speed_mass(dynamics, SPEED_INTEGRAL_REL_TOL) {
        Ok((_, ln_mass)) => {
            let mass = ln_mass.exp();
            if mass.is_finite() {
                SpeedIntegral::Finite(mass)
            } else {
                SpeedIntegral::Diverged
            }
        }
        Err(_) => SpeedIntegral::Diverged,
    };

    let stationary_exists = if at_zero == Attainability::Unattainable
        && at_infinity == Attainability::Unattainable
        && matches!(speed_integral, SpeedIntegral::Finite(_))
    {
        StationaryExistence::Yes
    } else {
        StationaryExistence::NotGuaranteed
    };

    BoundaryReport {
        at_zero,
        at_infinity,
        stationary_exists,
        diagnostics: Diagnostics {
            b0,
            s,
            k,
            c1,
            c2,
            limit_ratio_at_infinity: limit,
            speed_integral,
            zero_condition_marginal,
        },
    }
}

/// Stationary density obtained by normalizing the speed density,
/// `f(x) = m(x) / int m`.
#[derive(Clone, Debug)]
pub struct SpeedDensity {
    dynamics: PolyDynamics,
    z0: f64,
    ln_mass: f64,
}

impl SpeedDensity {
    pub fn ln_pdf(&self, x: f64) -> Result<f64, BoundaryError> {
        Ok(ln_speed_density(&self.dynamics, x, self.z0)? - self.ln_mass)
    }

    pub fn pdf(&self, x: f64) -> Result<f64, BoundaryError> {
        Ok(self.ln_pdf(x)?.exp())
    }

    pub fn dynamics(&self) -> &PolyDynamics {
        &self.dynamics
    }
}

/// Normalize the speed density into a stationary density.
///
/// Errors with [`BoundaryError::StationaryAbsent`] unless [`classify`]
/// reports that the stationary law exists.
pub fn stationary_from_speed(
    dynamics: &PolyDynamics,
    tol: f64,
) -> Result<SpeedDensity, BoundaryError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(BoundaryError::InvalidTolerance { tol });
    }
    let report = classify(dynamics);
    if report.stationary_exists != StationaryExistence::Yes {
        return Err(BoundaryError::StationaryAbsent);
    }
    let (z0, ln_mass) = speed_mass(dynamics, tol)?;
    Ok(SpeedDensity {
        dynamics: dynamics.clone(),
        z0,
        ln_mass,
    })
}
