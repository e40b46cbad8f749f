//! Domain types: CKLS parameter vectors, generalized polynomial dynamics,
//! and uniformly spaced sample paths.
//!
//! Every type validates its invariants on construction and is immutable
//! afterwards, so values can be shared freely across threads.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter {name} must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("parameter {name} must be finite, got {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },
    #[error("alpha must lie in [0.5, 1], got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("{which} polynomial needs at least one nonzero coefficient")]
    EmptyPolynomial { which: &'static str },
    #[error("{which} polynomial has a non-finite coefficient at degree {degree}")]
    NonFiniteCoefficient { which: &'static str, degree: usize },
    #[error("diffusion base must be positive on (0, inf): b({x}) = {value}")]
    NonPositiveDiffusionBase { x: f64, value: f64 },
    #[error("diffusion exponent must be strictly positive and finite, got {alpha}")]
    InvalidExponent { alpha: f64 },
    #[error("sample path needs at least one value")]
    EmptyPath,
    #[error("sample path step must be strictly positive and finite, got {dt}")]
    InvalidPathStep { dt: f64 },
    #[error("sample path start time must be nonnegative and finite, got {t0}")]
    InvalidPathStart { t0: f64 },
    #[error("sample path value at index {index} is not finite")]
    NonFinitePathValue { index: usize },
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NonFiniteParameter { name, value });
    }
    if value <= 0.0 {
        return Err(ModelError::NonPositiveParameter { name, value });
    }
    Ok(())
}

/// Parameters of the CKLS short-rate SDE
/// `dr = (beta1 - beta2 r) dt + sigma r^alpha dW` together with the initial
/// value `r0`.
///
/// All of `beta1`, `beta2`, `sigma`, `r0` are strictly positive and
/// `alpha` lies in `[0.5, 1]`; `alpha = 0.5` is the square-root (CIR) case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CklsParams {
    beta1: f64,
    beta2: f64,
    sigma: f64,
    alpha: f64,
    r0: f64,
}

impl CklsParams {
    pub fn new(beta1: f64, beta2: f64, sigma: f64, alpha: f64, r0: f64) -> Result<Self, ModelError> {
        require_positive("beta1", beta1)?;
        require_positive("beta2", beta2)?;
        require_positive("sigma", sigma)?;
        require_positive("r0", r0)?;
        if !alpha.is_finite() || !(0.5..=1.0).contains(&alpha) {
            return Err(ModelError::AlphaOutOfRange { alpha });
        }
        // the polynomial representation needs sigma^(1/alpha) representable
        if !sigma.powf(1.0 / alpha).is_finite() {
            return Err(ModelError::NonFiniteParameter {
                name: "sigma^(1/alpha)",
                value: sigma,
            });
        }
        Ok(Self { beta1, beta2, sigma, alpha, r0 })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Asymptotic mean `beta1 / beta2` of the mean-reverting drift.
    pub fn mu(&self) -> f64 {
        self.beta1 / self.beta2
    }

    /// Same parameters with a different starting point.
    pub fn with_r0(&self, r0: f64) -> Result<Self, ModelError> {
        Self::new(self.beta1, self.beta2, self.sigma, self.alpha, r0)
    }

    /// Same parameters with a different diffusion exponent.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ModelError> {
        Self::new(self.beta1, self.beta2, self.sigma, alpha, self.r0)
    }
}

/// Dense polynomial with `coeffs[i]` the coefficient of `x^i`.
///
/// A coefficient counts as zero only when it is exactly `0.0`; the
/// lowest-degree bookkeeping that drives boundary classification is
/// discontinuous in the coefficients, so nothing is snapped.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(which: &'static str, coeffs: Vec<f64>) -> Result<Self, ModelError> {
        for (degree, c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(ModelError::NonFiniteCoefficient { which, degree });
            }
        }
        if !coeffs.iter().any(|&c| c != 0.0) {
            return Err(ModelError::EmptyPolynomial { which });
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero beyond the stored length.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Smallest index with a nonzero coefficient.
    pub fn lowest_degree(&self) -> usize {
        self.coeffs.iter().position(|&c| c != 0.0).expect("nonzero poly")
    }

    pub fn lowest_coeff(&self) -> f64 {
        self.coeffs[self.lowest_degree()]
    }

    /// Largest index with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).expect("nonzero poly")
    }

    pub fn leading_coeff(&self) -> f64 {
        self.coeffs[self.degree()]
    }
}

/// Dynamics of the generalized SDE `dr = a(r) dt + b(r)^alpha dW` with
/// polynomial drift `a` and polynomial diffusion base `b`.
///
/// `b` must be positive on `(0, inf)`. The volatility scale is absorbed into
/// the base polynomial, so the squared diffusion is `b(r)^(2 alpha)` with no
/// extra factor; its behavior near zero is summarized by
/// [`diffusion_sq_lowest_degree`](Self::diffusion_sq_lowest_degree) and
/// [`diffusion_sq_lowest_coeff`](Self::diffusion_sq_lowest_coeff).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyDynamics {
    drift: Poly,
    diffusion_base: Poly,
    alpha: f64,
}

const POSITIVITY_GRID_POINTS: usize = 10_000;

impl PolyDynamics {
    pub fn new(
        drift_coeffs: Vec<f64>,
        diffusion_coeffs: Vec<f64>,
        alpha: f64,
    ) -> Result<Self, ModelError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(ModelError::InvalidExponent { alpha });
        }
        let drift = Poly::new("drift", drift_coeffs)?;
        let diffusion_base = Poly::new("diffusion", diffusion_coeffs)?;

        // b > 0 on (0, inf): check 1e4 log-spaced points in [1e-8, 1e8] plus
        // exact sign analysis of the coefficients controlling both ends.
        if diffusion_base.leading_coeff() <= 0.0 {
            return Err(ModelError::NonPositiveDiffusionBase {
                x: f64::INFINITY,
                value: diffusion_base.leading_coeff(),
            });
        }
        if diffusion_base.lowest_coeff() <= 0.0 {
            return Err(ModelError::NonPositiveDiffusionBase {
                x: 0.0,
                value: diffusion_base.lowest_coeff(),
            });
        }
        let n = POSITIVITY_GRID_POINTS;
        for i in 0..n {
            let x = 1e-8 * 10f64.powf(16.0 * i as f64 / (n - 1) as f64);
            let value = diffusion_base.eval(x);
            if value <= 0.0 {
                return Err(ModelError::NonPositiveDiffusionBase { x, value });
            }
        }

        Ok(Self { drift, diffusion_base, alpha })
    }

    pub fn drift(&self) -> &Poly {
        &self.drift
    }

    pub fn diffusion_base(&self) -> &Poly {
        &self.diffusion_base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn drift_at(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    /// `b(x)^alpha`; NaN when the base dips negative outside the validated
    /// domain (callers surface that as an error).
    pub fn diffusion_at(&self, x: f64) -> f64 {
        self.diffusion_base.eval(x).powf(self.alpha)
    }

    /// `b(x)^(2 alpha)`, the squared diffusion coefficient.
    pub fn diffusion_sq_at(&self, x: f64) -> f64 {
        self.diffusion_base.eval(x).powf(2.0 * self.alpha)
    }

    /// Lowest-order exponent of `b(x)^(2 alpha)` near zero: `2 k1 alpha`
    /// where `k1` is the lowest degree of the base polynomial.
    pub fn diffusion_sq_lowest_degree(&self) -> f64 {
        2.0 * self.diffusion_base.lowest_degree() as f64 * self.alpha
    }

    /// Coefficient attached to that lowest-order term.
    pub fn diffusion_sq_lowest_coeff(&self) -> f64 {
        self.diffusion_base.lowest_coeff().powf(2.0 * self.alpha)
    }
}

/// CKLS dynamics as a [`PolyDynamics`] value: drift `[beta1, -beta2]` and
/// diffusion base `sigma^(1/alpha) * x`, so that `b(x)^alpha = sigma x^alpha`.
pub fn ckls_as_poly(params: &CklsParams) -> PolyDynamics {
    PolyDynamics::new(
        vec![params.beta1(), -params.beta2()],
        vec![0.0, params.sigma().powf(1.0 / params.alpha())],
        params.alpha(),
    )
    .expect("validated CKLS parameters always map to valid dynamics")
}

/// A uniformly spaced trajectory: value `i` sits at time `t0 + i * dt`.
///
/// Times are derived, never stored, so the final sample time is
/// `t0 + (len - 1) * dt` by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self, ModelError> {
        if !t0.is_finite() || t0 < 0.0 {
            return Err(ModelError::InvalidPathStart { t0 });
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(ModelError::InvalidPathStep { dt });
        }
        if values.is_empty() {
            return Err(ModelError::EmptyPath);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinitePathValue { index });
        }
        Ok(Self { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Elapsed time between the first and last sample.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Truncate to the samples within `[t0, t0 + horizon]`.
    pub fn prefix(&self, horizon: f64) -> Result<Self, ModelError> {
        let steps = crate::numeric::step_count(horizon, self.dt).min(self.len() - 1);
        Self::new(self.t0, self.dt, self.values[..=steps].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_parameters_are_accepted() {
        let p = CklsParams::new(0.1, 0.5, 0.03, 0.5, 1.0).unwrap();
        assert_eq!(p.mu(), 0.2);
        assert_eq!(p.alpha(), 0.5);
    }

    #[test]
    fn alpha_outside_band_is_rejected() {
        let err = CklsParams::new(0.1, 0.5, 0.03, 0.4, 1.0).unwrap_err();
        assert_eq!(err, ModelError::AlphaOutOfRange { alpha: 0.4 });
        assert!(CklsParams::new(0.1, 0.5, 0.03, 1.01, 1.0).is_err());
        assert!(CklsParams::new(0.1, 0.5, 0.03, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn nonpositive_parameters_are_rejected() {
        let err = CklsParams::new(0.0, 0.5, 0.03, 0.5, 1.0).unwrap_err();
        assert_eq!(
            err,
            ModelError::NonPositiveParameter { name: "beta1", value: 0.0 }
        );
        assert!(CklsParams::new(0.1, -0.5, 0.03, 0.5, 1.0).is_err());
        assert!(CklsParams::new(0.1, 0.5, 0.0, 0.5, 1.0).is_err());
        assert!(CklsParams::new(0.1, 0.5, 0.03, 0.5, 0.0).is_err());
    }

    #[test]
    fn cir_maps_to_square_root_dynamics() {
        let p = CklsParams::new(0.1, 0.5, 0.03, 0.5, 1.0).unwrap();
        let dyn_ = ckls_as_poly(&p);
        assert_eq!(dyn_.drift().coeffs(), &[0.1, -0.5]);
        // b(x)^(2 alpha) = sigma^2 x: c1 = 9e-4, k = 1
        assert!((dyn_.diffusion_sq_lowest_coeff() - 9e-4).abs() < 1e-18);
        assert_eq!(dyn_.diffusion_sq_lowest_degree(), 1.0);
    }

    #[test]
    fn alpha_one_maps_to_linear_diffusion() {
        let p = CklsParams::new(0.2, 0.7, 0.05, 1.0, 0.5).unwrap();
        let dyn_ = ckls_as_poly(&p);
        assert_eq!(dyn_.drift().coeffs(), &[0.2, -0.7]);
        // b(x)^(2 alpha) = sigma^2 x^2: c1 = 2.5e-3, k = 2
        assert!((dyn_.diffusion_sq_lowest_coeff() - 2.5e-3).abs() < 1e-18);
        assert_eq!(dyn_.diffusion_sq_lowest_degree(), 2.0);
    }

    #[test]
    fn diffusion_base_must_stay_positive() {
        // negative on (0, 1)
        assert!(matches!(
            PolyDynamics::new(vec![1.0], vec![-1.0, 1.0], 0.5),
            Err(ModelError::NonPositiveDiffusionBase { .. })
        ));
        // negative leading coefficient, eventually negative
        assert!(matches!(
            PolyDynamics::new(vec![1.0], vec![1.0, -1e-12], 0.5),
            Err(ModelError::NonPositiveDiffusionBase { .. })
        ));
        // vanishing at zero with negative low-order coefficient
        assert!(matches!(
            PolyDynamics::new(vec![1.0], vec![0.0, -1.0, 1e9], 0.5),
            Err(ModelError::NonPositiveDiffusionBase { .. })
        ));
    }

    #[test]
    fn zero_polynomials_are_rejected() {
        assert!(matches!(
            PolyDynamics::new(vec![0.0, 0.0], vec![0.0, 1.0], 0.5),
            Err(ModelError::EmptyPolynomial { which: "drift" })
        ));
        assert!(matches!(
            PolyDynamics::new(vec![1.0], vec![0.0], 0.5),
            Err(ModelError::EmptyPolynomial { which: "diffusion" })
        ));
    }

    #[test]
    fn sample_path_validation() {
        assert!(SamplePath::new(0.0, 0.01, vec![]).is_err());
        assert!(SamplePath::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(SamplePath::new(-1.0, 0.01, vec![1.0]).is_err());
        assert!(SamplePath::new(0.0, 0.01, vec![1.0, f64::NAN]).is_err());
        let p = SamplePath::new(0.0, 0.25, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.duration(), 0.5);
        assert_eq!(p.time_at(2), 0.5);
    }

    #[test]
    fn prefix_keeps_spacing() {
        let p = SamplePath::new(0.0, 0.5, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let q = p.prefix(1.0).unwrap();
        assert_eq!(q.values(), &[1.0, 2.0, 3.0]);
        let r = p.prefix(100.0).unwrap();
        assert_eq!(r.len(), 5);
    }

    fn valid_params() -> impl Strategy<Value = CklsParams> {
        (
            0.01f64..2.0,
            0.05f64..3.0,
            0.005f64..0.3,
            prop_oneof![Just(0.5), Just(1.0), 0.5f64..1.0],
            0.05f64..5.0,
        )
            .prop_map(|(b1, b2, s, a, r0)| CklsParams::new(b1, b2, s, a, r0).unwrap())
    }

    proptest! {
        #[test]
        fn ckls_dynamics_have_linear_structure(p in valid_params()) {
            let dyn_ = ckls_as_poly(&p);
            // lowest drift degree 0 with coefficient beta1 > 0, and b(0) = 0
            prop_assert_eq!(dyn_.drift().lowest_degree(), 0);
            prop_assert_eq!(dyn_.drift().lowest_coeff(), p.beta1());
            prop_assert!(dyn_.drift().lowest_coeff() > 0.0);
            prop_assert_eq!(dyn_.diffusion_base().coeff(0), 0.0);
            prop_assert_eq!(dyn_.diffusion_base().eval(0.0), 0.0);
        }

        #[test]
        fn construction_is_pure(p in valid_params()) {
            let again = CklsParams::new(p.beta1(), p.beta2(), p.sigma(), p.alpha(), p.r0()).unwrap();
            prop_assert_eq!(p, again);
            prop_assert_eq!(ckls_as_poly(&p), ckls_as_poly(&again));
        }
    }
}
