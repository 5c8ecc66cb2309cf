//! Size and power experiments for the rank test and the Gaussian baseline.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::b_of_delta_limit;
use super::design::{simulate_design, ModelSpec};
use crate::alfd::AlfdCalibration;
use crate::dgp::{InnovationSampler, InnovationSpec};
use crate::error::{Error, Result};
use crate::reference::ReferenceKind;
use crate::rng::SeedStream;
use crate::testkit::{emw_test, wz_test, Reference, TestOptions, DEFAULT_K};

fn default_t() -> usize {
    500
}
fn default_reps() -> usize {
    1000
}
fn default_c_list() -> Vec<f64> {
    (0..=20).map(|k| -10.0 * k as f64).collect()
}
fn default_deltas() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0]
}
fn default_alpha() -> f64 {
    0.05
}
fn default_k() -> f64 {
    DEFAULT_K
}
fn default_reference() -> ReferenceKind {
    ReferenceKind::Gaussian
}

/// Paths to the two calibrations, relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPaths {
    pub wz: PathBuf,
    pub emw: PathBuf,
}

/// A power experiment: `n_reps` samples at each `(c, δ)` (or `(c, b)` when
/// `b_list` is given), each tested by both procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    #[serde(default = "default_c_list")]
    pub c_list: Vec<f64>,
    #[serde(default = "default_deltas")]
    pub delta_list: Vec<f64>,
    /// Fixed slopes instead of `B(δ)`, for power curves at fixed `c`.
    #[serde(default)]
    pub b_list: Option<Vec<f64>>,
    #[serde(default)]
    pub model: ModelSpec,
    /// True innovation law `f`, including its correlation and optional GARCH.
    pub innovations: InnovationSpec,
    /// Reference marginals `g` of the rank test.
    #[serde(default = "default_reference")]
    pub reference: ReferenceKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    pub seed: u64,
    #[serde(default)]
    pub calibrations: Option<CalibrationPaths>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.t < crate::testkit::MIN_OBS {
            return Err(Error::Config(format!("T must be at least {}", crate::testkit::MIN_OBS)));
        }
        if self.c_list.is_empty() || self.c_list.iter().any(|c| !(*c <= 0.0)) {
            return Err(Error::Config("c_list must be nonempty with values <= 0".into()));
        }
        if self.b_list.is_none() && self.delta_list.is_empty() {
            return Err(Error::Config("delta_list must be nonempty".into()));
        }
        self.innovations.validate()
    }

    /// SHA-256 of the JSON serialization, identifying the experiment.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `(δ, b)` pairs for one `c`.
    fn alternatives(&self, c: f64) -> Result<Vec<(Option<f64>, f64)>> {
        match &self.b_list {
            Some(bs) => Ok(bs.iter().map(|&b| (None, b)).collect()),
            None => self
                .delta_list
                .iter()
                .map(|&d| Ok((Some(d), b_of_delta_limit(d, c, self.innovations.rho)?)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestName {
    #[serde(rename = "WZ")]
    Wz,
    #[serde(rename = "EMW")]
    Emw,
}

impl std::fmt::Display for TestName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestName::Wz => "WZ",
            TestName::Emw => "EMW",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub test: TestName,
    pub c: f64,
    pub delta: Option<f64>,
    pub b: f64,
    pub rejection_rate: f64,
    pub se: f64,
    pub n_reps: usize,
}

impl PowerRow {
    fn new(test: TestName, c: f64, delta: Option<f64>, b: f64, rejections: usize, n_reps: usize) -> Self {
        let p = rejections as f64 / n_reps as f64;
        Self {
            test,
            c,
            delta,
            b,
            rejection_rate: p,
            se: (p * (1.0 - p) / n_reps as f64).sqrt(),
            n_reps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn rate(&self, test: TestName, c: f64, delta: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.test == test && r.c == c && r.delta == Some(delta))
            .map(|r| r.rejection_rate)
    }

    /// CSV with a comment header carrying the config hash and seed.
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: &str, seed: u64) -> Result<()> {
        writeln!(w, "# config_sha256={config_hash}")?;
        writeln!(w, "# master_seed={seed}")?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["test", "c", "delta", "b", "rejection_rate", "se", "n_reps"])
            .map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([
                r.test.to_string(),
                format!("{:?}", r.c),
                r.delta.map(|d| format!("{d:?}")).unwrap_or_default(),
                format!("{:?}", r.b),
                format!("{:?}", r.rejection_rate),
                format!("{:?}", r.se),
                r.n_reps.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs both tests on `n_reps` samples per cell.
///
/// Replication `r` at the `i`-th `c` uses stream `r` of child `i` of the
/// master seed for every alternative, so cells share random numbers along
/// the alternative axis and results do not depend on thread scheduling.
pub fn run_power_experiment(cfg: &ExperimentConfig, cal_wz: &AlfdCalibration, cal_emw: &AlfdCalibration) -> Result<PowerTable> {
    cfg.validate()?;
    let sampler = InnovationSampler::new(&cfg.innovations)?;
    let reference = Reference::from_kind(cfg.reference);
    let opts = TestOptions {
        alpha: cfg.alpha,
        k: cfg.k,
        ..TestOptions::default()
    };
    let root = SeedStream::new(cfg.seed);
    let mut rows = Vec::new();
    for (ci, &c) in cfg.c_list.iter().enumerate() {
        let seeds = root.child(ci as u64);
        for (delta, b) in cfg.alternatives(c)? {
            let outcomes: Vec<(bool, bool)> = (0..cfg.n_reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = seeds.rng(rep as u64);
                    let sample = simulate_design(b, c, cfg.t, &cfg.model, &sampler, &mut rng)?;
                    let wz = wz_test(&sample, &reference, cal_wz, &opts)?;
                    let emw = emw_test(&sample, cal_emw, &opts)?;
                    Ok((wz.reject, emw.reject))
                })
                .collect::<Result<_>>()
                .map_err(|e: Error| e.context(format!("replication at c = {c}, b = {b}")))?;
            let wz = outcomes.iter().filter(|o| o.0).count();
            let emw = outcomes.iter().filter(|o| o.1).count();
            log::info!(
                "c = {c}, b = {b:.3}: WZ {:.3}, EMW {:.3}",
                wz as f64 / cfg.n_reps as f64,
                emw as f64 / cfg.n_reps as f64
            );
            rows.push(PowerRow::new(TestName::Wz, c, delta, b, wz, cfg.n_reps));
            rows.push(PowerRow::new(TestName::Emw, c, delta, b, emw, cfg.n_reps));
        }
    }
    Ok(PowerTable { rows })
}
