//! Euler–Maruyama path generation and first-passage sampling.
//!
//! # Reproducibility contract
//!
//! Randomness comes from ChaCha8 seeded with the configured 64-bit seed; the
//! configured stream id selects an independent substream, so multi-path
//! drivers assign stream `i` to path `i` and results do not depend on thread
//! scheduling. Gaussian increments are drawn through the ziggurat sampler of
//! `rand_distr::StandardNormal`. With the dependency versions pinned by the
//! lockfile, identical `(params, config)` inputs produce bit-identical paths
//! on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{ckls_as_poly, CklsParams, PolyDynamics, SamplePath};
use crate::numeric::step_count;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("horizon T must be positive and finite, got {t}")]
    InvalidHorizon { t: f64 },
    #[error("dt must be positive, finite, and at most T = {t}; got {dt}")]
    InvalidStep { dt: f64, t: f64 },
    #[error("need at least 2 steps, floor(T/dt) gives {n}")]
    TooFewSteps { n: usize },
    #[error("dt = {dt} exceeds the explicit-Euler stability bound {limit} (0.1 over the linear reversion coefficient); shrink dt or enable the large-step override")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("diffusion base is negative at state {state}: b = {base}")]
    DiffusionUndefined { state: f64, base: f64 },
    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("start value must be positive and finite, got {r0}")]
    InvalidStart { r0: f64 },
    #[error("target level must be positive and finite, got {target}")]
    InvalidTarget { target: f64 },
    #[error("first-passage target {target} coincides with the start value {r0}")]
    TargetEqualsStart { r0: f64, target: f64 },
    #[error("t_max must be positive and finite, got {t_max}")]
    InvalidTMax { t_max: f64 },
}

/// How state positivity is maintained across Euler steps.
///
/// Discretizing a square-root-type diffusion can step below zero; the scheme
/// decides what the coefficient evaluations see.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositivityScheme {
    /// Evaluate drift and diffusion at `max(r, 0)`; stored states may still
    /// dip below zero.
    FullTruncation,
    /// Reflect the state, `r <- |r|`, after every step.
    Reflection,
}

/// Simulation horizon, step, seed, and scheme choices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    t_horizon: f64,
    dt: f64,
    seed: u64,
    stream: u64,
    scheme: PositivityScheme,
    allow_large_step: bool,
    noise_disabled: bool,
}

impl SimConfig {
    /// Requires `0 < dt <= T` and at least two steps on the horizon.
    pub fn new(t_horizon: f64, dt: f64, seed: u64) -> Result<Self, SimError> {
        if !t_horizon.is_finite() || t_horizon <= 0.0 {
            return Err(SimError::InvalidHorizon { t: t_horizon });
        }
        if !dt.is_finite() || dt <= 0.0 || dt > t_horizon {
            return Err(SimError::InvalidStep { dt, t: t_horizon });
        }
        let n = step_count(t_horizon, dt);
        if n < 2 {
            return Err(SimError::TooFewSteps { n });
        }
        Ok(Self {
            t_horizon,
            dt,
            seed,
            stream: 0,
            scheme: PositivityScheme::FullTruncation,
            allow_large_step: false,
            noise_disabled: false,
        })
    }

    pub fn with_scheme(mut self, scheme: PositivityScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Select an independent substream of the seed; multi-path drivers give
    /// path `i` stream `base + i`.
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    /// Permit `dt` beyond the drift stability bound.
    pub fn with_large_step_allowed(mut self) -> Self {
        self.allow_large_step = true;
        self
    }

    /// Force every Wiener increment to zero, turning the scheme into a
    /// deterministic Euler integration of the drift ODE.
    pub fn with_noise_disabled(mut self) -> Self {
        self.noise_disabled = true;
        self
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn scheme(&self) -> PositivityScheme {
        self.scheme
    }

    pub fn noise_disabled(&self) -> bool {
        self.noise_disabled
    }

    /// Number of Euler steps, `floor(T / dt)`.
    pub fn n_steps(&self) -> usize {
        step_count(self.t_horizon, self.dt)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Euler<'a> {
    dynamics: &'a PolyDynamics,
    scheme: PositivityScheme,
    dt: f64,
    sqrt_dt: f64,
    rng: Option<ChaCha8Rng>,
}

impl<'a> Euler<'a> {
    fn new(dynamics: &'a PolyDynamics, cfg: &SimConfig) -> Self {
        Euler {
            dynamics,
            scheme: cfg.scheme,
            dt: cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
            rng: if cfg.noise_disabled {
                None
            } else {
                Some(stream_rng(cfg.seed, cfg.stream))
            },
        }
    }

    fn step(&mut self, r: f64) -> Result<f64, SimError> {
        let x = match self.scheme {
            PositivityScheme::FullTruncation => r.max(0.0),
            PositivityScheme::Reflection => r,
        };
        let drift = self.dynamics.drift_at(x);
        let base = self.dynamics.diffusion_base().eval(x);
        if base < 0.0 {
            return Err(SimError::DiffusionUndefined { state: x, base });
        }
        let vol = base.powf(self.dynamics.alpha());
        let dw = match self.rng.as_mut() {
            Some(rng) => {
                let z: f64 = rng.sample(StandardNormal);
                z * self.sqrt_dt
            }
            None => 0.0,
        };
        let next = r + drift * self.dt + vol * dw;
        Ok(match self.scheme {
            PositivityScheme::FullTruncation => next,
            PositivityScheme::Reflection => next.abs(),
        })
    }
}

fn check_step_size(dynamics: &PolyDynamics, cfg: &SimConfig) -> Result<(), SimError> {
    if cfg.allow_large_step {
        return Ok(());
    }
    let linear = dynamics.drift().coeff(1);
    if linear < 0.0 {
        let limit = 0.1 / (-linear);
        if cfg.dt > limit {
            return Err(SimError::StepTooLarge { dt: cfg.dt, limit });
        }
    }
    Ok(())
}

/// Euler–Maruyama path for the generalized dynamics, started at `r0`.
///
/// Produces `n + 1` values covering `[0, n * dt]` with `n = floor(T / dt)`.
pub fn simulate_generalized(
    dynamics: &PolyDynamics,
    r0: f64,
    cfg: &SimConfig,
) -> Result<SamplePath, SimError> {
    if !r0.is_finite() || r0 <= 0.0 {
        return Err(SimError::InvalidStart { r0 });
    }
    check_step_size(dynamics, cfg)?;
    let n = cfg.n_steps();
    let mut values = Vec::with_capacity(n + 1);
    values.push(r0);
    let mut stepper = Euler::new(dynamics, cfg);
    let mut state = r0;
    for step in 1..=n {
        state = stepper.step(state)?;
        if !state.is_finite() {
            return Err(SimError::NonFiniteState { step });
        }
        values.push(state);
    }
    Ok(SamplePath::new(0.0, cfg.dt, values).expect("positive dt and finite values"))
}

/// Euler–Maruyama path for CKLS parameters.
///
/// Delegates to [`simulate_generalized`] on [`ckls_as_poly`], so the two
/// routes perform identical arithmetic.
pub fn simulate_ckls(params: &CklsParams, cfg: &SimConfig) -> Result<SamplePath, SimError> {
    simulate_generalized(&ckls_as_poly(params), params.r0(), cfg)
}

/// Outcome of a first-passage simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FirstPassage {
    /// Crossing time, linearly interpolated within the crossing step.
    Hit(f64),
    /// No crossing before `t_max`.
    Censored,
}

impl FirstPassage {
    pub fn hit(self) -> Option<f64> {
        match self {
            FirstPassage::Hit(t) => Some(t),
            FirstPassage::Censored => None,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, FirstPassage::Censored)
    }
}

/// First time the CKLS path crosses `target`, detected as a sign change of
/// `r - target` relative to the starting side and interpolated inside the
/// step. The simulation horizon is `t_max`; `cfg.t_horizon` is ignored here.
pub fn first_passage_time(
    params: &CklsParams,
    target: f64,
    cfg: &SimConfig,
    t_max: f64,
) -> Result<FirstPassage, SimError> {
    if !target.is_finite() || target <= 0.0 {
        return Err(SimError::InvalidTarget { target });
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(SimError::InvalidTMax { t_max });
    }
    let r0 = params.r0();
    if (r0 - target).abs() < 1e-12 {
        return Err(SimError::TargetEqualsStart { r0, target });
    }
    let dynamics = ckls_as_poly(params);
    check_step_size(&dynamics, cfg)?;
    let start_sign = (r0 - target).signum();
    let n_max = step_count(t_max, cfg.dt);
    let mut stepper = Euler::new(&dynamics, cfg);
    let mut prev = r0;
    for step in 1..=n_max {
        let next = stepper.step(prev)?;
        if !next.is_finite() {
            return Err(SimError::NonFiniteState { step });
        }
        if (next - target) * start_sign <= 0.0 {
            let t_prev = (step - 1) as f64 * cfg.dt;
            let frac = (target - prev) / (next - prev);
            return Ok(FirstPassage::Hit(t_prev + frac * cfg.dt));
        }
        prev = next;
    }
    Ok(FirstPassage::Censored)
}
