//! JSON configuration files for the command-line tasks. Unknown keys are
//! rejected so that typos cannot silently change an experiment.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::design::{population_limit_cov, simulate_design, ModelSpec};
use crate::alfd::{calibrate, default_b_bar, default_grid, AlfdCalibration, CalibrationSettings};
use crate::dgp::{InnovationSampler, InnovationSpec, Sample};
use crate::error::{Error, Result};
use crate::limit::{power_envelope_known_c, LimitCov, DEFAULT_STEPS};
use crate::reference::ReferenceKind;
use crate::rng::SeedStream;

/// Reads a JSON config. Syntax and schema errors become configuration
/// errors that name the file, line and column.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    parse_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn default_pop_draws() -> usize {
    1_000_000
}
fn default_n_draws() -> usize {
    20_000
}
fn default_n_cert() -> usize {
    100_000
}
fn default_steps() -> usize {
    DEFAULT_STEPS
}
fn default_alpha() -> f64 {
    0.05
}
fn default_epsilon() -> f64 {
    0.005
}
fn default_max_iter() -> usize {
    200
}
fn default_step() -> f64 {
    20.0
}

/// Where the limit covariance of a calibration comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CovSource {
    /// Population values of a simulation design.
    Design {
        innovations: InnovationSpec,
        reference: ReferenceKind,
        #[serde(default = "default_pop_draws")]
        population_draws: usize,
    },
    /// Gaussian innovations and reference at correlation `rho`.
    Gaussian { rho: f64 },
    /// An explicit covariance, e.g. estimated from data; `rho_g` sets `b̄`.
    Explicit { cov: LimitCov, rho_g: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub source: CovSource,
    pub seed: u64,
    #[serde(default = "default_n_draws")]
    pub n_draws: usize,
    #[serde(default = "default_n_cert")]
    pub n_cert: usize,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub b_bar: Option<f64>,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda1: Option<Vec<f64>>,
}

impl CovSource {
    /// Limit covariance and reference correlation. `seed` drives the
    /// population draws of a design.
    pub fn resolve(&self, seed: u64) -> Result<(LimitCov, f64)> {
        match self {
            CovSource::Design {
                innovations,
                reference,
                population_draws,
            } => {
                let d = population_limit_cov(innovations, *reference, *population_draws, seed)?;
                Ok((d.cov, d.rho_g))
            }
            CovSource::Gaussian { rho } => Ok((LimitCov::gaussian(*rho)?, *rho)),
            CovSource::Explicit { cov, rho_g } => {
                cov.cholesky()?;
                Ok((*cov, *rho_g))
            }
        }
    }
}

impl CalibrateConfig {
    pub fn resolve_cov(&self) -> Result<(LimitCov, f64)> {
        self.source.resolve(self.seed)
    }

    pub fn settings(&self, rho_g: f64) -> Result<CalibrationSettings> {
        let grid = self.grid.clone().unwrap_or_else(default_grid);
        let m = grid.len();
        let b_bar = match self.b_bar {
            Some(b) => b,
            None if m > 0 => default_b_bar(&grid, rho_g)?,
            None => return Err(Error::Config("grid must be nonempty".into())),
        };
        let settings = CalibrationSettings {
            lambda1: self.lambda1.clone().unwrap_or_else(|| vec![1.0 / m as f64; m]),
            grid,
            b_bar,
            alpha: self.alpha,
            epsilon: self.epsilon,
            n_draws: self.n_draws,
            n_cert: self.n_cert,
            n_steps: self.n_steps,
            master_seed: self.seed,
            max_iter: self.max_iter,
            step: self.step,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn run(&self) -> Result<AlfdCalibration> {
        let (cov, rho_g) = self.resolve_cov()?;
        calibrate(&self.settings(rho_g)?, &cov)
    }
}

fn default_t() -> usize {
    500
}

/// One synthetic sample at local parameters `(b, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub model: ModelSpec,
    pub innovations: InnovationSpec,
    pub seed: u64,
}

impl SimulateConfig {
    pub fn run(&self) -> Result<Sample> {
        let sampler = InnovationSampler::new(&self.innovations)?;
        let mut rng = SeedStream::new(self.seed).rng(0);
        simulate_design(self.b, self.c, self.t, &self.model, &sampler, &mut rng)
    }
}

fn default_env_draws() -> usize {
    20_000
}

/// Known-`c` power envelope over a list of slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub source: CovSource,
    pub c: f64,
    pub b_list: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_env_draws")]
    pub n_draws: usize,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub b: f64,
    pub power: f64,
    pub se: f64,
}

impl EnvelopeConfig {
    pub fn run(&self) -> Result<Vec<EnvelopePoint>> {
        let (cov, _) = self.source.resolve(self.seed)?;
        let p = power_envelope_known_c(&self.b_list, self.c, &cov, self.alpha, self.n_draws, self.n_steps, self.seed)?;
        let n = self.n_draws as f64;
        Ok(self
            .b_list
            .iter()
            .zip(p)
            .map(|(&b, power)| EnvelopePoint {
                b,
                power,
                se: (power * (1.0 - power) / n).sqrt(),
            })
            .collect())
    }
}
