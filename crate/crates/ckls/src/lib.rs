//! Mean-reverting interest-rate diffusions of the CKLS family:
//! simulation, regression-based parameter estimation, stationary
//! densities, and boundary classification.
//!
//! The crate is organized around the SDE
//!
//! ```text
//! dr_t = (beta1 - beta2 * r_t) dt + sigma * r_t^alpha dW_t,   alpha in [0.5, 1]
//! ```
//!
//! and its polynomial generalization `dr_t = a(r_t) dt + b(r_t)^alpha dW_t`.
//!
//! - [`model`] — validated parameter and dynamics types shared by everything else.
//! - [`simulate`] — Euler–Maruyama path generation and first-passage times,
//!   bit-reproducible for a given seed.
//! - [`estimate`] — the discretized-regression estimators for the drift pair
//!   and the volatility scale, with asymptotic covariances and confidence
//!   intervals.
//! - [`stationary`] — stationary densities, their moments, and the
//!   covariance-matrix integrals.
//! - [`boundary`] — scale/speed densities and attainability classification of
//!   the boundaries at 0 and infinity.
//! - [`meanrev`] — mean-reversion rate, half-life, and first-passage
//!   experiments.
//! - [`quadrature`] — the shared adaptive integration engine.
//!
//! A narrative guide with runnable snippets lives in the `book/` directory of
//! the repository; the snippets double as doc-tests (see the crate's
//! `booktests` module).

pub mod boundary;
pub mod estimate;
pub mod io;
pub mod meanrev;
pub mod model;
pub mod presets;
pub mod quadrature;
pub mod simulate;
pub mod stationary;

mod booktests;
pub(crate) mod numeric;

pub use model::{ckls_as_poly, CklsParams, ModelError, Poly, PolyDynamics, SamplePath};
pub use simulate::{
    first_passage_time, simulate_ckls, simulate_generalized, FirstPassage, PositivityScheme,
    SimConfig, SimError,
};
