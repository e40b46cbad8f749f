//! Canonical parameter sets for the bundled calibration experiments.
//!
//! Five blocks spanning the admissible exponent band, each paired with the
//! horizons the recovery experiments report on. The CLI's `repro` command and
//! the acceptance suite share these definitions.

use crate::model::CklsParams;

#[derive(Clone, Copy, Debug)]
pub struct ParameterBlock {
    pub name: &'static str,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub r0: f64,
}

impl ParameterBlock {
    pub fn params(&self) -> CklsParams {
        CklsParams::new(self.beta1, self.beta2, self.sigma, self.alpha, self.r0)
            .expect("preset blocks are valid")
    }
}

/// The five calibration blocks of the recovery experiment.
pub const PARAMETER_BLOCKS: [ParameterBlock; 5] = [
    ParameterBlock { name: "sqrt-diffusion", beta1: 0.1, beta2: 0.5, sigma: 0.03, alpha: 0.5, r0: 1.0 },
    ParameterBlock { name: "linear-diffusion", beta1: 0.2, beta2: 0.7, sigma: 0.05, alpha: 1.0, r0: 0.5 },
    ParameterBlock { name: "alpha-0.6", beta1: 0.15, beta2: 0.3, sigma: 0.04, alpha: 0.6, r0: 1.5 },
    ParameterBlock { name: "alpha-0.8", beta1: 0.25, beta2: 0.6, sigma: 0.06, alpha: 0.8, r0: 1.0 },
    ParameterBlock { name: "alpha-0.55", beta1: 0.3, beta2: 0.9, sigma: 0.07, alpha: 0.55, r0: 0.7 },
];

/// Horizons the recovery table reports on.
pub const TABLE_HORIZONS: [f64; 4] = [10.0, 20.0, 50.0, 100.0];

/// Step size of the recovery experiment.
pub const TABLE_DT: f64 = 1e-4;
