//! The structural limit experiment: `dW_ε = c W_ε ds + dZ_ε` and
//! `dW_g = J_gf (b, c)' W_ε ds + dZ_g`, with `(Z_ε, Z_g)` Brownian motion of
//! covariance `[[1, σ_εg'], [σ_εg, J_g]]`, simulated by an Euler scheme on a
//! common grid.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cholesky3_psd, mat2_inv, quantile, Mat2};
use crate::processes::{bridge, stats_from_slices, StepPath, SuffStats};
use crate::reference::PseudoInfo;
use crate::rng::{SeedStream, SimRng};

pub const DEFAULT_STEPS: usize = 1000;

/// Covariance inputs of the limit experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCov {
    pub sigma_eg: [f64; 2],
    #[serde(rename = "J_g")]
    pub j_g: Mat2,
    #[serde(rename = "J_gf")]
    pub j_gf: Mat2,
    #[serde(rename = "J_pseudo")]
    pub j_pseudo: PseudoInfo,
}

impl LimitCov {
    /// Gaussian innovations with Gaussian reference at correlation `rho`:
    /// `σ_εg = (0, 1)` and `J_g = J_gf = J_p = R⁻¹`.
    pub fn gaussian(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("rho = {rho} must lie in (-1, 1)")));
        }
        let r_inv = mat2_inv(&[[1.0, rho], [rho, 1.0]])?;
        Ok(Self {
            sigma_eg: [0.0, 1.0],
            j_g: r_inv,
            j_gf: r_inv,
            j_pseudo: PseudoInfo { j: r_inv },
        })
    }

    pub fn joint_covariance(&self) -> [[f64; 3]; 3] {
        let s = self.sigma_eg;
        let j = self.j_g;
        [[1.0, s[0], s[1]], [s[0], j[0][0], j[0][1]], [s[1], j[1][0], j[1][1]]]
    }

    /// Checks positive semidefiniteness and returns the Cholesky factor.
    pub fn cholesky(&self) -> Result<[[f64; 3]; 3]> {
        let det = self.j_g[0][0] * self.j_g[1][1] - self.j_g[0][1] * self.j_g[1][0];
        let scale = self.j_g[0][0].abs().max(self.j_g[1][1].abs()).max(1e-300);
        if !(det > 1e-12 * scale * scale) {
            return Err(Error::Domain("J_g is singular".into()));
        }
        if (self.j_g[0][1] - self.j_g[1][0]).abs() > 1e-12 * scale {
            return Err(Error::Domain("J_g is not symmetric".into()));
        }
        cholesky3_psd(&self.joint_covariance())
    }
}

/// Invariant log-likelihood ratio
/// `b S_1 + c S_2 - ½((b,c) J (b,c)' - c²) S_3 - ½ c² S_4`.
pub fn log_lr(b: f64, c: f64, stats: &SuffStats, j: &PseudoInfo) -> f64 {
    b * stats.s1 + c * stats.s2 - 0.5 * (j.quad(b, c) - c * c) * stats.s3 - 0.5 * c * c * stats.s4
}

/// Euler path of `dW = cW ds + dZ` on the grid `i/n`.
pub fn simulate_ou(c: f64, n_steps: usize, seed: u64) -> Result<StepPath> {
    if n_steps < 2 {
        return Err(Error::Config("n_steps must be at least 2".into()));
    }
    let mut rng = SeedStream::new(seed).rng(0);
    Ok(ou_path(c, n_steps, &mut rng))
}

pub fn ou_path(c: f64, n_steps: usize, rng: &mut SimRng) -> StepPath {
    let nf = n_steps as f64;
    let (drift, sd) = (c / nf, 1.0 / nf.sqrt());
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        w += drift * w + sd * z;
        values.push(w);
    }
    StepPath { values }
}

/// One simulated draw of the limit sufficient statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitDraw {
    pub stats: SuffStats,
    pub n_steps: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Simulated paths `(W_ε, W_gy, W_gx)` before bridging.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPaths {
    pub w_eps: StepPath,
    pub w_gy: StepPath,
    pub w_gx: StepPath,
}

/// Reusable simulator for one covariance and grid.
#[derive(Debug, Clone)]
pub struct LimitSimulator {
    cov: LimitCov,
    chol: [[f64; 3]; 3],
    active: [bool; 3],
    n_steps: usize,
}

impl LimitSimulator {
    pub fn new(cov: LimitCov, n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::Config("n_steps must be at least 2".into()));
        }
        let chol = cov.cholesky()?;
        let active = [0, 1, 2].map(|k| (0..3).any(|i| chol[i][k] != 0.0));
        Ok(Self { cov, chol, active, n_steps })
    }

    pub fn cov(&self) -> &LimitCov {
        &self.cov
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Fills `paths` (each of length `n + 1`) with one Euler draw.
    pub fn paths_into(&self, b: f64, c: f64, rng: &mut SimRng, w: &mut [f64], gy: &mut [f64], gx: &mut [f64]) {
        let n = self.n_steps;
        let nf = n as f64;
        let sd = 1.0 / nf.sqrt();
        let l = &self.chol;
        let jgf = &self.cov.j_gf;
        let load_y = (jgf[0][0] * b + jgf[0][1] * c) / nf;
        let load_x = (jgf[1][0] * b + jgf[1][1] * c) / nf;
        let ce = c / nf;
        w[0] = 0.0;
        gy[0] = 0.0;
        gx[0] = 0.0;
        for i in 0..n {
            let mut z = [0.0; 3];
            for (k, zk) in z.iter_mut().enumerate() {
                if self.active[k] {
                    *zk = rng.sample(StandardNormal);
                }
            }
            let e0 = l[0][0] * z[0];
            let e1 = l[1][0] * z[0] + l[1][1] * z[1];
            let e2 = l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2];
            let wi = w[i];
            w[i + 1] = wi + ce * wi + sd * e0;
            gy[i + 1] = gy[i] + load_y * wi + sd * e1;
            gx[i + 1] = gx[i] + load_x * wi + sd * e2;
        }
    }

    pub fn paths(&self, b: f64, c: f64, rng: &mut SimRng) -> LimitPaths {
        let m = self.n_steps + 1;
        let (mut w, mut gy, mut gx) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        self.paths_into(b, c, rng, &mut w, &mut gy, &mut gx);
        LimitPaths {
            w_eps: StepPath::new(w),
            w_gy: StepPath::new(gy),
            w_gx: StepPath::new(gx),
        }
    }

    /// Sufficient statistics of one draw; `buf` is scratch space reused across calls.
    pub fn stats(&self, b: f64, c: f64, rng: &mut SimRng, buf: &mut LimitBuffer) -> SuffStats {
        let m = self.n_steps + 1;
        buf.resize(m);
        self.paths_into(b, c, rng, &mut buf.w, &mut buf.gy, &mut buf.gx);
        bridge_in_place(&mut buf.gy);
        bridge_in_place(&mut buf.gx);
        stats_from_slices(&buf.w, &buf.gy, &buf.gx)
    }
}

/// Same arithmetic as [`crate::processes::bridge`].
fn bridge_in_place(v: &mut [f64]) {
    let n = (v.len() - 1) as f64;
    let end = v[v.len() - 1];
    for (t, x) in v.iter_mut().enumerate() {
        *x -= (t as f64 / n) * end;
    }
}

#[derive(Debug, Default, Clone)]
pub struct LimitBuffer {
    w: Vec<f64>,
    gy: Vec<f64>,
    gx: Vec<f64>,
}

impl LimitBuffer {
    fn resize(&mut self, m: usize) {
        self.w.resize(m, 0.0);
        self.gy.resize(m, 0.0);
        self.gx.resize(m, 0.0);
    }
}

/// Bridges the score paths and computes the sufficient statistics, exactly
/// as done for sample paths.
pub fn stats_from_paths(p: &LimitPaths) -> SuffStats {
    let by = bridge(&p.w_gy);
    let bx = bridge(&p.w_gx);
    stats_from_slices(&p.w_eps.values, &by.values, &bx.values)
}

/// One limit draw from stream 0 of `seed`.
pub fn simulate_limit_stats(b: f64, c: f64, cov: &LimitCov, n_steps: usize, seed: u64) -> Result<LimitDraw> {
    if c > 0.0 {
        return Err(Error::Domain(format!("c = {c} must be <= 0")));
    }
    let sim = LimitSimulator::new(*cov, n_steps)?;
    let mut rng = SeedStream::new(seed).rng(0);
    let stats = stats_from_paths(&sim.paths(b, c, &mut rng));
    Ok(LimitDraw { stats, n_steps, seed, stream: 0 })
}

/// `n_draws` i.i.d. limit statistics at `(b, c)`; draw `i` uses stream `i`
/// of `seeds`, so the result does not depend on thread scheduling.
pub fn simulate_many(sim: &LimitSimulator, b: f64, c: f64, n_draws: usize, seeds: SeedStream) -> Vec<SuffStats> {
    use rayon::prelude::*;
    (0..n_draws)
        .into_par_iter()
        .map_init(LimitBuffer::default, |buf, i| {
            let mut rng = seeds.rng(i as u64);
            sim.stats(b, c, &mut rng, buf)
        })
        .collect()
}

/// Power of the known-`c` Neyman-Pearson test at each `b` in `b_grid`.
pub fn power_envelope_known_c(
    b_grid: &[f64],
    c: f64,
    cov: &LimitCov,
    alpha: f64,
    n_draws: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if n_draws < 1000 {
        return Err(Error::Config(format!("power envelope needs at least 1000 draws, got {n_draws}")));
    }
    if c > 0.0 {
        return Err(Error::Domain(format!("c = {c} must be <= 0")));
    }
    let sim = LimitSimulator::new(*cov, n_steps)?;
    let root = SeedStream::new(seed);
    let null = simulate_many(&sim, 0.0, c, n_draws, root.child(0));
    let j = cov.j_pseudo;
    b_grid
        .iter()
        .map(|&b| {
            let null_stat: Vec<f64> = null.iter().map(|s| log_lr(b, c, s, &j)).collect();
            let crit = quantile(&null_stat, 1.0 - alpha);
            // Common random numbers across b keep the curve smooth.
            let alt = simulate_many(&sim, b, c, n_draws, root.child(1));
            // Randomize on ties so the null size is exactly α; this matters
            // when the statistic is degenerate, e.g. at b = 0.
            let frac = |v: &mut dyn Iterator<Item = f64>| {
                let (mut above, mut at) = (0usize, 0usize);
                for x in v {
                    if x > crit {
                        above += 1;
                    } else if x == crit {
                        at += 1;
                    }
                }
                (above as f64 / n_draws as f64, at as f64 / n_draws as f64)
            };
            let (a0, t0) = frac(&mut null_stat.iter().copied());
            let gamma = if t0 > 0.0 { ((alpha - a0) / t0).clamp(0.0, 1.0) } else { 0.0 };
            let (a1, t1) = frac(&mut alt.iter().map(|s| log_lr(b, c, s, &j)));
            Ok(a1 + gamma * t1)
        })
        .collect()
}
