//! Monte Carlo experiments, configuration files and output writers.

pub mod config;
pub mod design;
pub mod power;
pub mod svg;

pub use config::{CalibrateConfig, CovSource, EnvelopeConfig, SimulateConfig};
pub use design::{population_limit_cov, DesignCov, ModelSpec};
pub use power::{run_power_experiment, ExperimentConfig, PowerRow, PowerTable, TestName};

use crate::error::{Error, Result};

/// `B(δ) = δ √((-2c + 6) / (1 - ρ²))`, the alternative giving roughly equal
/// power across persistence levels.
pub fn b_of_delta(delta: f64, c: f64, rho: f64) -> Result<f64> {
    if !(c < 0.0) {
        return Err(Error::Domain(format!("B(delta) is defined for c < 0, got c = {c}")));
    }
    b_of_delta_limit(delta, c, rho)
}

/// `B(δ)` extended continuously to `c = 0`, used by the power sweeps.
pub fn b_of_delta_limit(delta: f64, c: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} must lie in (-1, 1)")));
    }
    if !(c <= 0.0) {
        return Err(Error::Domain(format!("c = {c} must be <= 0")));
    }
    Ok(delta * ((-2.0 * c + 6.0) / (1.0 - rho * rho)).sqrt())
}
