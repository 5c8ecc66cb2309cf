//! Approximate least favorable distribution (ALFD) calibration of the
//! Neyman-Pearson mixture test over a grid of null persistence values.
//!
//! The test rejects when
//! `ln Σ_j λ1_j e^{L(b̄, c_j)} - ln Σ_j λ0_j e^{L(0, c_j)} > ln κ`.
//! Since every `L(b, c)` is `K + c·A - ½c²·B` in the sufficient statistics,
//! each simulated draw is reduced to three numbers once and the weights can
//! be re-fitted without touching the paths again.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::b_of_delta;
use crate::limit::{simulate_many, LimitCov, LimitSimulator, DEFAULT_STEPS};
use crate::numeric::{quantile_sorted, weighted_quantile};
use crate::processes::SuffStats;
use crate::rng::SeedStream;

pub const FORMAT_VERSION: u32 = 1;

/// `{-(k/4)² : k = 0..56}`.
pub fn default_grid() -> Vec<f64> {
    (0..=56).map(|k| -(k as f64 / 4.0).powi(2)).collect()
}

/// Fixed alternative `B(1.645)` at the middle of `grid`.
pub fn default_b_bar(grid: &[f64], rho_g: f64) -> Result<f64> {
    let c_mid = grid[grid.len() / 2];
    b_of_delta(1.645, if c_mid < 0.0 { c_mid } else { -1e-12 }, rho_g)
}

/// Inputs of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    pub grid: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub b_bar: f64,
    pub alpha: f64,
    pub epsilon: f64,
    /// Draws per grid point used while fitting the weights.
    pub n_draws: usize,
    /// Fresh draws per grid point used for the certificate.
    pub n_cert: usize,
    pub n_steps: usize,
    pub master_seed: u64,
    pub max_iter: usize,
    /// Step size `ω` of the multiplicative weight update.
    pub step: f64,
}

impl CalibrationSettings {
    /// Default grid, uniform `Λ_1`, `b̄ = B(1.645)` at the mid-grid `c`.
    pub fn defaults(rho_g: f64, master_seed: u64) -> Result<Self> {
        let grid = default_grid();
        let m = grid.len();
        Ok(Self {
            b_bar: default_b_bar(&grid, rho_g)?,
            lambda1: vec![1.0 / m as f64; m],
            grid,
            alpha: 0.05,
            epsilon: 0.005,
            n_draws: 20_000,
            n_cert: 100_000,
            n_steps: DEFAULT_STEPS,
            master_seed,
            max_iter: 200,
            step: 20.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.grid.is_empty() {
            return cfg("grid must be nonempty".into());
        }
        if self.grid.iter().any(|c| !(c.is_finite() && *c <= 0.0)) {
            return cfg("grid values must be finite and <= 0".into());
        }
        if self.lambda1.len() != self.grid.len() {
            return cfg("lambda1 must have one weight per grid point".into());
        }
        if self.lambda1.iter().any(|w| !(*w >= 0.0)) || self.lambda1.iter().sum::<f64>() <= 0.0 {
            return cfg("lambda1 must be nonnegative with positive total".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return cfg(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if !(self.epsilon > 0.0) {
            return cfg("epsilon must be positive".into());
        }
        if self.n_draws < 100 || self.n_cert < 100 {
            return cfg("n_draws and n_cert must be at least 100".into());
        }
        if self.n_steps < 2 {
            return cfg("n_steps must be at least 2".into());
        }
        if !(self.step > 0.0) || self.max_iter == 0 {
            return cfg("step must be positive and max_iter at least 1".into());
        }
        Ok(())
    }
}

/// Held-out evidence that the calibration satisfies both ALFD clauses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Largest null rejection rate of the returned test over the grid.
    pub max_null_rej: f64,
    /// Rejection rate at every grid point.
    pub null_rejection: Vec<f64>,
    /// `Σ λ0_j RP_j` of the size-α test against the `Λ0` mixture.
    pub size_under_lambda0: f64,
    /// Weighted average power of the size-α test against the `Λ0` mixture.
    pub wap_bound: f64,
    /// Weighted average power of the returned test.
    pub wap_test: f64,
    pub n_draws: usize,
    pub n_steps: usize,
    pub seeds: CertificateSeeds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateSeeds {
    pub master: u64,
    /// Child-stream tags of the calibration and certification pools.
    pub calibration_tag: u64,
    pub certification_tag: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlfdCalibration {
    pub version: u32,
    pub grid: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub lambda1: Vec<f64>,
    /// Critical value on the likelihood-ratio scale.
    pub kappa: f64,
    pub log_kappa: f64,
    pub b_bar: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub cov: LimitCov,
    pub iterations: usize,
    pub certificate: Certificate,
}

/// State of the weight iteration, attached to calibration failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDiagnostics {
    pub iterations: usize,
    pub lambda0: Vec<f64>,
    pub max_null_rej: f64,
    pub wap_bound: f64,
    pub wap_test: f64,
}

impl AlfdCalibration {
    pub fn validate(&self) -> Result<()> {
        let m = self.grid.len();
        if m == 0 || self.lambda0.len() != m || self.lambda1.len() != m {
            return Err(Error::Config("calibration weights do not match the grid".into()));
        }
        if self.lambda0.iter().chain(&self.lambda1).any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("calibration weights must be nonnegative".into()));
        }
        if !self.log_kappa.is_finite() {
            return Err(Error::Config("calibration critical value is not finite".into()));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "calibration format version {} is not supported (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        self.cov.cholesky()?;
        Ok(())
    }

    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        let cal: Self = serde_json::from_reader(r)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_json(std::io::BufReader::new(f)).map_err(|e| e.context(format!("parsing {}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.to_json(&mut f)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    fn mixture(&self) -> Result<Mixture> {
        Mixture::new(&self.grid, &self.lambda1, self.b_bar, &self.cov)
    }
}

/// Log-weights and the quadratic-in-c representation of `L(b, c)`.
#[derive(Debug, Clone)]
struct Mixture {
    grid: Vec<f64>,
    log_l1: Vec<f64>,
    b_bar: f64,
    j: [[f64; 2]; 2],
}

fn log_weights(w: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("mixture weights must be nonnegative and not all zero".into()));
    }
    Ok(w.iter().map(|v| (v / total).ln()).collect())
}

/// `ln Σ_i exp(lw_i + c_i a - ½ c_i² b)`.
fn log_mix(grid: &[f64], lw: &[f64], a: f64, b: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut terms = [0.0f64; 128];
    let big = grid.len() > terms.len();
    let mut heap = if big { vec![0.0; grid.len()] } else { Vec::new() };
    let buf: &mut [f64] = if big { &mut heap } else { &mut terms[..grid.len()] };
    for (i, (&c, &w)) in grid.iter().zip(lw).enumerate() {
        let v = if w == f64::NEG_INFINITY { w } else { w + c * a - 0.5 * c * c * b };
        buf[i] = v;
        best = best.max(v);
    }
    if best == f64::NEG_INFINITY {
        return best;
    }
    best + buf.iter().map(|v| (v - best).exp()).sum::<f64>().ln()
}

impl Mixture {
    fn new(grid: &[f64], lambda1: &[f64], b_bar: f64, cov: &LimitCov) -> Result<Self> {
        Ok(Self {
            grid: grid.to_vec(),
            log_l1: log_weights(lambda1)?,
            b_bar,
            j: cov.j_pseudo.j,
        })
    }

    /// `B` coefficient shared by null and alternative: `(J_xx - 1) S_3 + S_4`.
    fn curvature(&self, s: &SuffStats) -> f64 {
        (self.j[1][1] - 1.0) * s.s3 + s.s4
    }

    /// Log of the alternative mixture density ratio.
    fn numerator(&self, s: &SuffStats) -> f64 {
        let b = self.b_bar;
        let k = b * s.s1 - 0.5 * self.j[0][0] * b * b * s.s3;
        let a = s.s2 - self.j[0][1] * b * s.s3;
        k + log_mix(&self.grid, &self.log_l1, a, self.curvature(s))
    }

    fn reduce(&self, s: &SuffStats) -> Reduced {
        Reduced {
            num: self.numerator(s),
            a: s.s2,
            b: self.curvature(s),
        }
    }
}

/// A draw reduced to what the mixture statistic needs.
#[derive(Debug, Clone, Copy)]
struct Reduced {
    num: f64,
    a: f64,
    b: f64,
}

impl Reduced {
    fn stat(&self, grid: &[f64], log_l0: &[f64]) -> f64 {
        self.num - log_mix(grid, log_l0, self.a, self.b)
    }
}

/// The mixture log-likelihood-ratio statistic for `stats` under `cal`.
pub fn np_mixture_stat(stats: &SuffStats, cal: &AlfdCalibration) -> Result<f64> {
    let mix = cal.mixture()?;
    let log_l0 = log_weights(&cal.lambda0)?;
    Ok(mix.reduce(stats).stat(&mix.grid, &log_l0))
}

/// `np_mixture_stat` for explicit weights; convenient for checks and examples.
pub fn np_mixture_stat_with(
    stats: &SuffStats,
    grid: &[f64],
    lambda0: &[f64],
    lambda1: &[f64],
    b_bar: f64,
    cov: &LimitCov,
) -> Result<f64> {
    let mix = Mixture::new(grid, lambda1, b_bar, cov)?;
    let log_l0 = log_weights(lambda0)?;
    Ok(mix.reduce(stats).stat(grid, &log_l0))
}

const CAL_TAG: u64 = 1;
const CERT_TAG: u64 = 2;

/// In-sample deficiency target as a fraction of `ε`. The weights are fitted
/// on the calibration draws, so the bound there is biased low by roughly
/// `60/n_draws` for the default grid; the rest of `ε` absorbs that.
const STOP_FRACTION: f64 = 0.5;

struct Pools {
    null: Vec<Vec<Reduced>>,
    alt: Vec<Vec<Reduced>>,
}

fn simulate_pools(
    sim: &LimitSimulator,
    mix: &Mixture,
    grid: &[f64],
    b_bar: f64,
    n: usize,
    root: SeedStream,
    with_alt: bool,
) -> Pools {
    let pool = |b: f64, j: usize, kind: u64| -> Vec<Reduced> {
        let seeds = root.child(kind * 1_000_000 + j as u64);
        simulate_many(sim, b, grid[j], n, seeds)
            .iter()
            .map(|s| mix.reduce(s))
            .collect()
    };
    let null = (0..grid.len())
        .map(|j| {
            log::debug!("null pool c = {}", grid[j]);
            pool(0.0, j, 0)
        })
        .collect();
    let alt = if with_alt {
        (0..grid.len()).map(|j| pool(b_bar, j, 1)).collect()
    } else {
        Vec::new()
    };
    Pools { null, alt }
}

fn pool_stats(pools: &[Vec<Reduced>], grid: &[f64], log_l0: &[f64]) -> Vec<Vec<f64>> {
    pools
        .iter()
        .map(|p| p.par_iter().map(|r| r.stat(grid, log_l0)).collect())
        .collect()
}

/// Weighted `(1-α)` quantile of the pooled null statistics with weights
/// `λ0_j / n_j`: the critical value of the size-α test against the mixture.
fn mixture_critical_value(stats: &[Vec<f64>], lambda0: &[f64], alpha: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = stats
        .iter()
        .zip(lambda0)
        .filter(|(_, w)| **w > 0.0)
        .flat_map(|(s, &w)| {
            let wi = w / s.len() as f64;
            s.iter().map(move |&v| (v, wi))
        })
        .collect();
    weighted_quantile(&mut pairs, 1.0 - alpha)
}

fn rejection_rates(stats: &[Vec<f64>], crit: f64) -> Vec<f64> {
    stats
        .iter()
        .map(|s| s.iter().filter(|&&v| v > crit).count() as f64 / s.len() as f64)
        .collect()
}

fn weighted_power(alt: &[Vec<f64>], lambda1: &[f64], crit: f64) -> f64 {
    let total: f64 = lambda1.iter().sum();
    rejection_rates(alt, crit)
        .iter()
        .zip(lambda1)
        .map(|(r, w)| r * w / total)
        .sum()
}

/// Smallest critical value giving level `α` at every grid point.
fn uniform_critical_value(stats: &[Vec<f64>], alpha: f64) -> f64 {
    stats
        .iter()
        .map(|s| {
            let mut v = s.clone();
            v.sort_by(f64::total_cmp);
            quantile_sorted(&v, 1.0 - alpha)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fits `Λ_0` and `κ` by multiplicative weight updates on reused draws, then
/// certifies the result on fresh draws.
pub fn calibrate(settings: &CalibrationSettings, cov: &LimitCov) -> Result<AlfdCalibration> {
    settings.validate()?;
    let sim = LimitSimulator::new(*cov, settings.n_steps)?;
    let mix = Mixture::new(&settings.grid, &settings.lambda1, settings.b_bar, cov)?;
    let grid = &settings.grid;
    let m = grid.len();
    let alpha = settings.alpha;
    let root = SeedStream::new(settings.master_seed);

    log::info!("simulating calibration pools: {m} grid points x {} draws", settings.n_draws);
    let pools = simulate_pools(&sim, &mix, grid, settings.b_bar, settings.n_draws, root.child(CAL_TAG), true);

    let evaluate = |lambda0: &[f64]| -> Result<(f64, CalibrationDiagnostics)> {
        let log_l0 = log_weights(lambda0)?;
        let null = pool_stats(&pools.null, grid, &log_l0);
        let alt = pool_stats(&pools.alt, grid, &log_l0);
        let crit = mixture_critical_value(&null, lambda0, alpha);
        let k_eps = uniform_critical_value(&null, alpha);
        Ok((
            k_eps,
            CalibrationDiagnostics {
                iterations: 0,
                lambda0: lambda0.to_vec(),
                max_null_rej: rejection_rates(&null, k_eps).into_iter().fold(0.0, f64::max),
                wap_bound: weighted_power(&alt, &settings.lambda1, crit),
                wap_test: weighted_power(&alt, &settings.lambda1, k_eps),
            },
        ))
    };

    let mut log_l0 = vec![-(m as f64).ln(); m];
    let mut last = CalibrationDiagnostics {
        iterations: 0,
        lambda0: vec![1.0 / m as f64; m],
        max_null_rej: f64::NAN,
        wap_bound: f64::NAN,
        wap_test: f64::NAN,
    };
    let mut found: Option<(Vec<f64>, f64, usize)> = None;
    for iter in 0..settings.max_iter {
        let lambda0: Vec<f64> = log_l0.iter().map(|v| v.exp()).collect();
        let check = iter % 5 == 4 || iter + 1 == settings.max_iter || m == 1;
        if check {
            let (k_eps, mut diag) = evaluate(&lambda0)?;
            diag.iterations = iter + 1;
            log::info!(
                "iteration {}: WAP bound {:.4}, WAP {:.4}, max null rejection {:.4}",
                iter + 1,
                diag.wap_bound,
                diag.wap_test,
                diag.max_null_rej
            );
            if diag.wap_bound - diag.wap_test <= STOP_FRACTION * settings.epsilon {
                found = Some((lambda0, k_eps, iter + 1));
                break;
            }
            // Keep the closest iterate for the failure report.
            if !(last.wap_bound - last.wap_test <= diag.wap_bound - diag.wap_test) {
                last = diag;
            }
        }

        let null = pool_stats(&pools.null, grid, &log_l0);
        let crit = mixture_critical_value(&null, &lambda0, alpha);
        let rp = rejection_rates(&null, crit);
        for j in 0..m {
            log_l0[j] += settings.step * (rp[j] - alpha);
        }
        let norm = crate::numeric::log_sum_exp(log_l0.iter().copied());
        for v in log_l0.iter_mut() {
            *v -= norm;
        }
    }

    let Some((lambda0, log_kappa, iterations)) = found else {
        return Err(Error::CalibrationFailure {
            message: format!(
                "power deficiency above {} after {} iterations",
                STOP_FRACTION * settings.epsilon,
                settings.max_iter
            ),
            diagnostics: Box::new(last),
        });
    };

    log::info!("certifying on {} fresh draws per grid point", settings.n_cert);
    let log_l0 = log_weights(&lambda0)?;
    let cert_pools = simulate_pools(&sim, &mix, grid, settings.b_bar, settings.n_cert, root.child(CERT_TAG), true);
    let null = pool_stats(&cert_pools.null, grid, &log_l0);
    let alt = pool_stats(&cert_pools.alt, grid, &log_l0);
    let crit_star = mixture_critical_value(&null, &lambda0, alpha);
    let rp_star = rejection_rates(&null, crit_star);
    let size_under_lambda0 = rp_star.iter().zip(&lambda0).map(|(r, w)| r * w).sum();
    let null_rejection = rejection_rates(&null, log_kappa);
    let certificate = Certificate {
        max_null_rej: null_rejection.iter().copied().fold(0.0, f64::max),
        null_rejection,
        size_under_lambda0,
        wap_bound: weighted_power(&alt, &settings.lambda1, crit_star),
        wap_test: weighted_power(&alt, &settings.lambda1, log_kappa),
        n_draws: settings.n_cert,
        n_steps: settings.n_steps,
        seeds: CertificateSeeds {
            master: settings.master_seed,
            calibration_tag: CAL_TAG,
            certification_tag: CERT_TAG,
        },
    };
    Ok(AlfdCalibration {
        version: FORMAT_VERSION,
        grid: grid.clone(),
        lambda0,
        lambda1: settings.lambda1.clone(),
        kappa: log_kappa.exp(),
        log_kappa,
        b_bar: settings.b_bar,
        alpha,
        epsilon: settings.epsilon,
        cov: *cov,
        iterations,
        certificate,
    })
}

/// Null rejection rate of a calibrated test at one grid point, with its
/// binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub c: f64,
    pub rate: f64,
    pub se: f64,
}

/// Fresh-draw estimate of `P(reject | b = 0, c_j)` on every grid point.
pub fn null_rejection_profile(cal: &AlfdCalibration, n_draws: usize, n_steps: usize, seed: u64) -> Result<Vec<RejectionRate>> {
    cal.validate()?;
    if n_draws == 0 {
        return Err(Error::Config("n_draws must be positive".into()));
    }
    let sim = LimitSimulator::new(cal.cov, n_steps)?;
    let mix = cal.mixture()?;
    let log_l0 = log_weights(&cal.lambda0)?;
    let root = SeedStream::new(seed);
    Ok(cal
        .grid
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let draws = simulate_many(&sim, 0.0, c, n_draws, root.child(j as u64));
            let rej = draws
                .iter()
                .filter(|s| mix.reduce(s).stat(&cal.grid, &log_l0) > cal.log_kappa)
                .count();
            let rate = rej as f64 / n_draws as f64;
            RejectionRate {
                c,
                rate,
                se: (rate * (1.0 - rate) / n_draws as f64).sqrt(),
            }
        })
        .collect())
}

/// Two-point calibration with `κ = 1`, for tests that only need a valid object.
#[cfg(test)]
pub(crate) fn toy_calibration() -> AlfdCalibration {
    AlfdCalibration {
        version: FORMAT_VERSION,
        grid: vec![0.0, -10.0],
        lambda0: vec![0.5, 0.5],
        lambda1: vec![0.5, 0.5],
        kappa: 1.0,
        log_kappa: 0.0,
        b_bar: 5.0,
        alpha: 0.05,
        epsilon: 0.005,
        cov: LimitCov::gaussian(-0.5).unwrap(),
        iterations: 0,
        certificate: Certificate {
            max_null_rej: 0.05,
            null_rejection: vec![0.05, 0.05],
            size_under_lambda0: 0.05,
            wap_bound: 0.5,
            wap_test: 0.5,
            n_draws: 0,
            n_steps: 10,
            seeds: CertificateSeeds {
                master: 0,
                calibration_tag: CAL_TAG,
                certification_tag: CERT_TAG,
            },
        },
    }
}
