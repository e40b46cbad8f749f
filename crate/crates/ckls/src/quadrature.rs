//! Adaptive numerical integration shared by the density, boundary, and
//! covariance computations.
//!
//! Two entry points cover everything the rest of the crate needs:
//!
//! - [`integrate_finite`] — Gauss–Kronrod 7/15 with worst-interval-first
//!   bisection on a finite segment.
//! - [`integrate_halfline_log`] — improper integrals over `(0, inf)` of
//!   integrands supplied in log space. The half-line is split at a caller
//!   chosen point, each side is mapped through `r = split * exp(±u)`, and the
//!   tail range doubles until the increment falls below the requested
//!   relative tolerance. All arithmetic is carried out relative to the
//!   integrand's log-maximum so that exponents of order -10^3, routine for
//!   the stationary densities in this crate, never underflow.
//!
//! Node placement is deterministic; repeated calls with the same integrand
//! and tolerance produce identical results.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFiniteEvaluation { x: f64 },
    #[error("tail increments did not decay below tolerance within {max_doublings} range doublings")]
    DivergentTail { max_doublings: u32 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive and finite, got {tol}")]
    InvalidTolerance { tol: f64 },
    #[error("split point must be positive and finite, got {split}")]
    InvalidSplit { split: f64 },
}

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

/// Outcome of a half-line integration kept in log scale, for integrals whose
/// linear value would over- or underflow.
#[derive(Clone, Copy, Debug)]
pub struct LogQuadResult {
    /// Natural log of the integral value (`f64::NEG_INFINITY` for a zero integrand).
    pub ln_value: f64,
    pub rel_error_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

// 15-point Kronrod extension of 7-point Gauss on [-1, 1]; positive abscissae.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Result<f64, QuadError>>(
    f: &F,
    a: f64,
    b: f64,
    evals: &mut u64,
) -> Result<Segment, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    *evals += 15;
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

fn refine_worst<F: Fn(f64) -> Result<f64, QuadError>>(
    f: &F,
    segments: &mut Vec<Segment>,
    tol_abs: f64,
    max_segments: usize,
    evals: &mut u64,
) -> Result<bool, QuadError> {
    loop {
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        if total_error <= tol_abs {
            return Ok(true);
        }
        if segments.len() >= max_segments {
            return Ok(false);
        }
        let mut worst = 0;
        for (i, s) in segments.iter().enumerate() {
            if s.error > segments[worst].error {
                worst = i;
            }
        }
        let Segment { a, b, .. } = segments[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval no longer splittable at f64 resolution
            return Ok(total_error <= tol_abs);
        }
        let left = gk15(f, a, mid, evals)?;
        let right = gk15(f, mid, b, evals)?;
        segments[worst] = left;
        segments.push(right);
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns `converged = false` (with the best estimate so far) if the
/// subdivision budget is exhausted first; a non-finite integrand value is an
/// error.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(QuadError::InvalidTolerance { tol });
    }
    let checked = |x: f64| -> Result<f64, QuadError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFiniteEvaluation { x })
        }
    };
    let mut evals = 0u64;
    let mut segments = vec![gk15(&checked, a, b, &mut evals)?];
    let converged = refine_worst(&checked, &mut segments, tol, 2048, &mut evals)?;
    Ok(QuadResult {
        value: segments.iter().map(|s| s.value).sum(),
        abs_error_estimate: segments.iter().map(|s| s.error).sum(),
        evaluations: evals,
        converged,
    })
}

/// Which halves of `(0, inf)` around the split point to cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sides {
    Both,
    /// `(0, split]` only — used for cumulative distribution values.
    LowerOnly,
}

const MAX_DOUBLINGS: u32 = 60;
const LN2: f64 = std::f64::consts::LN_2;

/// Half-line integration of a log-space integrand, result kept in log scale.
///
/// `ln_f(r)` must return the natural log of a nonnegative integrand;
/// `f64::NEG_INFINITY` encodes an exact zero. `rel_tol` is relative to the
/// integral value.
pub fn integrate_halfline_log_scaled<F: Fn(f64) -> f64>(
    ln_f: F,
    split: f64,
    rel_tol: f64,
) -> Result<LogQuadResult, QuadError> {
    halfline_impl(&ln_f, split, rel_tol, Sides::Both)
}

/// Half-line integration of a log-space integrand, result in linear scale.
///
/// Same contract as [`integrate_halfline_log_scaled`]; use that variant when
/// the integral itself can leave the representable range of `f64`. The
/// returned `abs_error_estimate` is `rel_tol`-based, and `converged` means the
/// relative error estimate met `tol`.
pub fn integrate_halfline_log<F: Fn(f64) -> f64>(
    ln_f: F,
    split: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    let log = halfline_impl(&ln_f, split, tol, Sides::Both)?;
    let value = log.ln_value.exp();
    Ok(QuadResult {
        value,
        abs_error_estimate: log.rel_error_estimate * value,
        evaluations: log.evaluations,
        converged: log.converged,
    })
}

pub(crate) fn integrate_lower_tail_log_scaled<F: Fn(f64) -> f64>(
    ln_f: &F,
    upper: f64,
    rel_tol: f64,
) -> Result<LogQuadResult, QuadError> {
    halfline_impl(ln_f, upper, rel_tol, Sides::LowerOnly)
}

/// Log-space integrand after the substitution `r = split * exp(side * u)`:
/// `g(u) = ln_f(r) + ln(split) + side * u`.
fn transformed<F: Fn(f64) -> f64>(
    ln_f: &F,
    split: f64,
    side: f64,
    u: f64,
) -> Result<f64, QuadError> {
    let r = split * (side * u).exp();
    if r == 0.0 || !r.is_finite() {
        // abscissa left the representable range; no convergent integral in
        // this crate carries mass there, and divergent ones are caught by the
        // increment rule long before
        return Ok(f64::NEG_INFINITY);
    }
    let v = ln_f(r);
    if v.is_nan() || v == f64::INFINITY {
        return Err(QuadError::NonFiniteEvaluation { x: r });
    }
    Ok(v + split.ln() + side * u)
}

fn halfline_impl<F: Fn(f64) -> f64>(
    ln_f: &F,
    split: f64,
    rel_tol: f64,
    sides: Sides,
) -> Result<LogQuadResult, QuadError> {
    if !(split > 0.0) || !split.is_finite() {
        return Err(QuadError::InvalidSplit { split });
    }
    if !(rel_tol > 0.0) || !rel_tol.is_finite() {
        return Err(QuadError::InvalidTolerance { tol: rel_tol });
    }
    let side_list: &[f64] = match sides {
        Sides::Both => &[1.0, -1.0],
        Sides::LowerOnly => &[-1.0],
    };
    let mut evals = 0u64;

    // Locate the log-maximum over the reachable range to use as the
    // exponential shift. Coarse scan, then a few local refinements.
    let u_scan_max = MAX_DOUBLINGS as f64 * LN2;
    let mut shift = f64::NEG_INFINITY;
    let mut best = (1.0f64, 0.0f64);
    for &side in side_list {
        let mut u = 0.0;
        while u <= u_scan_max {
            let g = transformed(ln_f, split, side, u)?;
            evals += 1;
            if g > shift {
                shift = g;
                best = (side, u);
            }
            u += 0.25;
        }
    }
    if shift == f64::NEG_INFINITY {
        return Ok(LogQuadResult {
            ln_value: f64::NEG_INFINITY,
            rel_error_estimate: 0.0,
            evaluations: evals,
            converged: true,
        });
    }
    let mut step = 0.25;
    for _ in 0..6 {
        step /= 5.0;
        let (side, center) = best;
        for k in -5i32..=5 {
            let u = center + k as f64 * step;
            if u < 0.0 {
                continue;
            }
            let g = transformed(ln_f, split, side, u)?;
            evals += 1;
            if g > shift {
                shift = g;
                best = (side, u);
            }
        }
    }

    let shifted = |side: f64| {
        move |u: f64| -> Result<f64, QuadError> {
            Ok((transformed(ln_f, split, side, u)? - shift).exp())
        }
    };

    let mut segments: Vec<Segment> = Vec::new();
    let mut total = 0.0f64;
    for &side in side_list {
        let f_side = shifted(side);
        let mut quiet_tail = 0u32;
        for j in 0..MAX_DOUBLINGS {
            let a = j as f64 * LN2;
            let b = a + LN2;
            let seg = gk15(&f_side, a, b, &mut evals)?;
            let mut local = vec![seg];
            let local_tol = rel_tol * total.max(seg.value.abs()) / 64.0;
            refine_worst(&f_side, &mut local, local_tol.max(f64::MIN_POSITIVE), 256, &mut evals)?;
            let increment: f64 = local.iter().map(|s| s.value).sum();
            // global coordinate: negative u addresses the lower half
            segments.extend(local.iter().map(|s| {
                if side > 0.0 {
                    *s
                } else {
                    Segment { a: -s.b, b: -s.a, ..*s }
                }
            }));
            total += increment;
            if !total.is_finite() {
                return Err(QuadError::DivergentTail {
                    max_doublings: MAX_DOUBLINGS,
                });
            }
            if total > 0.0 && increment <= rel_tol * total {
                quiet_tail += 1;
                if quiet_tail >= 2 {
                    break;
                }
            } else {
                quiet_tail = 0;
                if j + 1 == MAX_DOUBLINGS {
                    return Err(QuadError::DivergentTail {
                        max_doublings: MAX_DOUBLINGS,
                    });
                }
            }
        }
    }

    // Polish globally until the summed error estimate meets the tolerance.
    let f_any = |u: f64| -> Result<f64, QuadError> {
        let side = if u < 0.0 { -1.0 } else { 1.0 };
        Ok((transformed(ln_f, split, side, side * u)? - shift).exp())
    };
    let tol_abs = rel_tol * total.max(f64::MIN_POSITIVE);
    let converged = refine_worst(&f_any, &mut segments, tol_abs, 8192, &mut evals)?;
    let value: f64 = segments.iter().map(|s| s.value).sum();
    let error: f64 = segments.iter().map(|s| s.error).sum();
    if value <= 0.0 {
        return Ok(LogQuadResult {
            ln_value: f64::NEG_INFINITY,
            rel_error_estimate: 0.0,
            evaluations: evals,
            converged: true,
        });
    }
    Ok(LogQuadResult {
        ln_value: shift + value.ln(),
        rel_error_estimate: error / value,
        evaluations: evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_integrand_is_exact() {
        let r = integrate_finite(|x| x, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12, "got {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn sine_over_half_period() {
        let r = integrate_finite(f64::sin, 0.0, std::f64::consts::PI, 1e-11).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "got {}", r.value);
        assert!(r.converged);
        assert!(r.abs_error_estimate <= 1e-11);
    }

    #[test]
    fn nan_integrand_is_an_error() {
        let err = integrate_finite(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-9);
        assert!(matches!(err, Err(QuadError::NonFiniteEvaluation { .. })));
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(
            integrate_finite(|x| x, 1.0, 0.0, 1e-9),
            Err(QuadError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn gamma_two_integrand() {
        // x * exp(-x) over (0, inf) = Gamma(2) = 1
        let r = integrate_halfline_log(|x| x.ln() - x, 1.0, 1e-11).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "got {}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn lognormal_type_integrand() {
        // exp(-(ln r)^2) dr: substitute r = e^t, integral = int exp(t - t^2) dt
        // = sqrt(pi) * exp(1/4)
        let expected = std::f64::consts::PI.sqrt() * 0.25f64.exp();
        let r = integrate_halfline_log(|x| -(x.ln() * x.ln()), 1.0, 1e-10).unwrap();
        assert!(
            (r.value - expected).abs() < 1e-8 * expected,
            "got {} want {}",
            r.value,
            expected
        );
    }

    #[test]
    fn one_over_r_diverges() {
        let err = integrate_halfline_log(|x| -x.ln(), 1.0, 1e-8);
        assert!(matches!(err, Err(QuadError::DivergentTail { .. })));
    }

    #[test]
    fn huge_log_scale_survives() {
        // integrand exp(-1000) * standard Gamma(3) shape; linear value ~ 2e-435
        let r = integrate_halfline_log_scaled(|x| 2.0 * x.ln() - x - 1000.0, 2.0, 1e-10).unwrap();
        assert!(r.converged);
        let expected = 2.0f64.ln() - 1000.0; // ln Gamma(3) = ln 2
        assert!(
            (r.ln_value - expected).abs() < 1e-9,
            "ln got {} want {}",
            r.ln_value,
            expected
        );
    }

    #[test]
    fn scale_consistency() {
        // integral of f(c r) * c over (0,inf) equals integral of f
        let base = integrate_halfline_log(|x| x.ln() - x, 1.0, 1e-10).unwrap();
        for c in [0.03, 7.5] {
            let scaled =
                integrate_halfline_log(|x| (c * x).ln() - c * x + c.ln(), 1.0 / c, 1e-10).unwrap();
            assert!(
                (scaled.value - base.value).abs() <= 10.0 * 1e-10 * base.value.abs().max(1.0),
                "c = {c}: {} vs {}",
                scaled.value,
                base.value
            );
        }
    }

    #[test]
    fn tightening_tolerance_does_not_worsen_error() {
        let loose = integrate_finite(f64::sin, 0.0, 3.0, 1e-6).unwrap();
        let tight = integrate_finite(f64::sin, 0.0, 3.0, 1e-12).unwrap();
        assert!(tight.abs_error_estimate <= loose.abs_error_estimate);

        let loose = integrate_halfline_log(|x| x.ln() - x, 1.0, 1e-6).unwrap();
        let tight = integrate_halfline_log(|x| x.ln() - x, 1.0, 1e-12).unwrap();
        assert!(tight.abs_error_estimate <= loose.abs_error_estimate);
    }

    #[test]
    fn lower_tail_only_covers_left_half() {
        // int_0^1 3 x^2 dx = 1 with ln f = ln 3 + 2 ln x
        let r =
            integrate_lower_tail_log_scaled(&|x: f64| 3.0f64.ln() + 2.0 * x.ln(), 1.0, 1e-10)
                .unwrap();
        assert!((r.ln_value.exp() - 1.0).abs() < 1e-9);
    }
}
