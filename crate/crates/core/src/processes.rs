//! Ranks, partial-sum and rank-score bridge paths, left-point stochastic
//! integrals and the sufficient statistics `(S_1, S_2, S_3, S_4)`.

use serde::{Deserialize, Serialize};

use crate::dgp::Sample;
use crate::error::{Error, Result};
use crate::numeric::{correlation, Mat2};
use crate::reference::{combine_scores, norm_inv, ReferenceScore};

/// Step path on the grid `t/T`, `t = 0..T`, with `values[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    pub values: Vec<f64>,
}

impl StepPath {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self { values }
    }

    pub fn zeros(t: usize) -> Self {
        Self { values: vec![0.0; t + 1] }
    }

    /// Number of steps `T`.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn end(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Cumulative path `(0, a_1, a_1 + a_2, ...)` scaled by `scale`.
    pub fn from_increments(inc: &[f64], scale: f64) -> Self {
        let mut values = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for v in inc {
            acc += v;
            values.push(acc * scale);
        }
        Self { values }
    }
}

/// Brownian-bridge transform `B(t/T) = W(t/T) - (t/T) W(1)`; the endpoint
/// is exactly zero.
pub fn bridge(path: &StepPath) -> StepPath {
    let n = path.steps() as f64;
    let end = path.end();
    let values = path
        .values
        .iter()
        .enumerate()
        .map(|(t, v)| v - (t as f64 / n) * end)
        .collect();
    StepPath { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuffStats {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl SuffStats {
    pub const ZERO: SuffStats = SuffStats { s1: 0.0, s2: 0.0, s3: 0.0, s4: 0.0 };
}

/// Ranks `1..=n` with ties broken by first occurrence.
pub fn ranks(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank + 1;
    }
    r
}

/// Ranks of `y_t` and of `Δx_t` within the sample.
pub fn component_ranks(sample: &Sample) -> Result<(Vec<usize>, Vec<usize>)> {
    let t = sample.len();
    if t < 2 {
        return Err(Error::InsufficientData { needed: 2, got: t });
    }
    if sample.x.len() != t {
        return Err(Error::Dimension("y and x lengths differ".into()));
    }
    Ok((ranks(&sample.y), ranks(&sample.dx())))
}

/// `W(t/T) = (x_t - x_0) / (σ̂_x √T)`, i.e. the scaled partial sum of `Δx`.
pub fn partial_sum_eps(sample: &Sample, sigma_x_hat: f64) -> Result<StepPath> {
    if !(sigma_x_hat > 0.0 && sigma_x_hat.is_finite()) {
        return Err(Error::Domain(format!("sigma_x_hat = {sigma_x_hat} must be positive")));
    }
    let root_t = (sample.len() as f64).sqrt();
    let mut values = Vec::with_capacity(sample.len() + 1);
    values.push(0.0);
    for &x in &sample.x {
        values.push((x - sample.x0) / sigma_x_hat / root_t);
    }
    Ok(StepPath { values })
}

/// Per-observation reference scores `ℓ_g(R_y/(T+1), R_x/(T+1))`.
pub fn rank_scores(r_y: &[usize], r_x: &[usize], reference: &ReferenceScore) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = r_y.len();
    if r_x.len() != t {
        return Err(Error::Dimension("rank vectors differ in length".into()));
    }
    check_permutation(r_y)?;
    check_permutation(r_x)?;
    let tab = reference.rank_scores(t);
    let mut ly = Vec::with_capacity(t);
    let mut lx = Vec::with_capacity(t);
    for (&a, &b) in r_y.iter().zip(r_x) {
        let (gy, gx) = combine_scores(tab[0][a - 1], tab[1][b - 1], reference.rho_g);
        ly.push(gy);
        lx.push(gx);
    }
    Ok((ly, lx))
}

fn check_permutation(r: &[usize]) -> Result<()> {
    let mut seen = vec![false; r.len()];
    for &v in r {
        if v == 0 || v > r.len() || seen[v - 1] {
            return Err(Error::Domain("ranks are not a permutation of 1..T".into()));
        }
        seen[v - 1] = true;
    }
    Ok(())
}

/// Bridged partial sums of score sequences.
pub fn score_bridges(ly: &[f64], lx: &[f64]) -> (StepPath, StepPath) {
    let scale = 1.0 / (ly.len() as f64).sqrt();
    (
        bridge(&StepPath::from_increments(ly, scale)),
        bridge(&StepPath::from_increments(lx, scale)),
    )
}

/// Bridged rank-score processes `(B_{ℓ_gy}, B_{ℓ_gx})`.
pub fn rank_score_bridge(r_y: &[usize], r_x: &[usize], reference: &ReferenceScore) -> Result<(StepPath, StepPath)> {
    let (ly, lx) = rank_scores(r_y, r_x, reference)?;
    Ok(score_bridges(&ly, &lx))
}

/// Left-point sum `Σ_t integrand((t-1)/T)·[integrator(t/T) - integrator((t-1)/T)]`.
pub fn ito_sum(integrand: &StepPath, integrator: &StepPath) -> Result<f64> {
    if integrand.values.len() != integrator.values.len() {
        return Err(Error::Dimension(format!(
            "paths have {} and {} steps",
            integrand.steps(),
            integrator.steps()
        )));
    }
    Ok(ito_slices(&integrand.values, &integrator.values))
}

fn ito_slices(f: &[f64], g: &[f64]) -> f64 {
    f.windows(2)
        .zip(g.windows(2))
        .map(|(a, b)| a[0] * (b[1] - b[0]))
        .sum()
}

/// Sufficient statistics from raw slices of equal length `T + 1`.
pub fn stats_from_slices(w: &[f64], by: &[f64], bx: &[f64]) -> SuffStats {
    let n = w.len() - 1;
    let (mut m1, mut m2, mut i_y, mut i_x) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..n {
        let v = w[t];
        m1 += v;
        m2 += v * v;
        i_y += v * (by[t + 1] - by[t]);
        i_x += v * (bx[t + 1] - bx[t]);
    }
    let nf = n as f64;
    let mean = m1 / nf;
    let mean_sq = m2 / nf;
    SuffStats {
        s1: i_y,
        s2: i_x + w[n] * mean,
        s3: (mean_sq - mean * mean).max(0.0),
        s4: mean_sq,
    }
}

/// `S_1 = ∫W dB_y`, `S_2 = ∫W dB_x + W(1)·mean(W)`, `S_3 = mean(W²) - mean(W)²`,
/// `S_4 = mean(W²)`, with left-point sums and grid means over `t = 0..T-1`.
pub fn sufficient_stats(w_eps: &StepPath, b_gy: &StepPath, b_gx: &StepPath) -> Result<SuffStats> {
    let n = w_eps.values.len();
    if b_gy.values.len() != n || b_gx.values.len() != n {
        return Err(Error::Dimension("paths differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(stats_from_slices(&w_eps.values, &b_gy.values, &b_gx.values))
}

/// Residual-based nuisance estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Nuisance {
    /// Sample correlation of the two residual series.
    pub rho_g_hat: f64,
    pub sigma_x_hat: f64,
    pub eps_y_hat: Vec<f64>,
    pub eps_x_hat: Vec<f64>,
}

/// `ε̂^y = y - ȳ`; `ε̂^x` are OLS residuals of `x_t` on `(1, x_{t-1})`;
/// `σ̂_x` is their standard deviation (divisor `T - 1`).
///
/// The regression is run on `x - x_0`, so adding a constant to the whole
/// x-series (including `x_0`) leaves the residuals unchanged.
pub fn residual_nuisance(sample: &Sample) -> Result<Nuisance> {
    let t = sample.len();
    if t < 3 {
        return Err(Error::InsufficientData { needed: 3, got: t });
    }
    let tf = t as f64;
    let ybar = sample.y.iter().sum::<f64>() / tf;
    let eps_y_hat: Vec<f64> = sample.y.iter().map(|v| v - ybar).collect();

    let cur: Vec<f64> = sample.x.iter().map(|v| v - sample.x0).collect();
    let mut lag = Vec::with_capacity(t);
    lag.push(0.0);
    lag.extend_from_slice(&cur[..t - 1]);
    let (ml, mc) = (lag.iter().sum::<f64>() / tf, cur.iter().sum::<f64>() / tf);
    let (mut sll, mut slc) = (0.0, 0.0);
    for (l, c) in lag.iter().zip(&cur) {
        sll += (l - ml) * (l - ml);
        slc += (l - ml) * (c - mc);
    }
    let slope = if sll > 0.0 { slc / sll } else { 0.0 };
    let eps_x_hat: Vec<f64> = lag
        .iter()
        .zip(&cur)
        .map(|(l, c)| (c - mc) - slope * (l - ml))
        .collect();

    let sd = |v: &[f64]| (v.iter().map(|e| e * e).sum::<f64>() / (tf - 1.0)).sqrt();
    let sigma_y = sd(&eps_y_hat);
    let sigma_x_hat = sd(&eps_x_hat);
    if !(sigma_y > 0.0) || !(sigma_x_hat > 0.0) {
        return Err(Error::DegenerateData("residuals have zero variance".into()));
    }
    let rho_g_hat = correlation(&eps_y_hat, &eps_x_hat);
    Ok(Nuisance {
        rho_g_hat,
        sigma_x_hat,
        eps_y_hat,
        eps_x_hat,
    })
}

/// Correlation of the normal scores `Φ⁻¹(R/(T+1))` of two rank vectors.
///
/// Used as the default reference correlation because it depends on the data
/// only through ranks.
pub fn normal_scores_correlation(r_y: &[usize], r_x: &[usize]) -> f64 {
    let n = r_y.len() as f64 + 1.0;
    let a: Vec<f64> = r_y.iter().map(|&r| norm_inv(r as f64 / n)).collect();
    let b: Vec<f64> = r_x.iter().map(|&r| norm_inv(r as f64 / n)).collect();
    correlation(&a, &b)
}

/// Sample covariance `Ĵ_g` of the rank-score pairs and the covariance
/// `σ̂_εg` of `ε̂^x/sd(ε̂^x)` with them.
pub fn moment_estimates(
    eps_x_hat: &[f64],
    r_y: &[usize],
    r_x: &[usize],
    reference: &ReferenceScore,
) -> Result<(Mat2, [f64; 2])> {
    let (ly, lx) = rank_scores(r_y, r_x, reference)?;
    if eps_x_hat.len() != ly.len() {
        return Err(Error::Dimension("residuals and ranks differ in length".into()));
    }
    Ok(score_moments(eps_x_hat, &ly, &lx))
}

pub(crate) fn score_moments(eps_x: &[f64], ly: &[f64], lx: &[f64]) -> (Mat2, [f64; 2]) {
    let n = ly.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (my, mx, me) = (mean(ly), mean(lx), mean(eps_x));
    let cov = |a: &[f64], ma: f64, b: &[f64], mb: f64| {
        a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / (n - 1.0)
    };
    let jyy = cov(ly, my, ly, my);
    let jyx = cov(ly, my, lx, mx);
    let jxx = cov(lx, mx, lx, mx);
    let sd_e = cov(eps_x, me, eps_x, me).sqrt();
    let sigma = if sd_e > 0.0 {
        [cov(eps_x, me, ly, my) / sd_e, cov(eps_x, me, lx, mx) / sd_e]
    } else {
        [0.0, 0.0]
    };
    ([[jyy, jyx], [jyx, jxx]], sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{draw_innovations, simulate_sample, InnovationSpec, ModelParams};
    use proptest::prelude::*;

    fn sample_from(y: Vec<f64>, x: Vec<f64>) -> Sample {
        Sample::new(y, x, 0.0).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(ranks(&[3.0, 1.0, 2.0]), vec![3, 1, 2]);
        assert_eq!(ranks(&[1.0, 2.0, 3.0, 4.0]), vec![1, 2, 3, 4]);
        // Tie at positions 2 and 5 (1-based): position 2 gets the lower rank.
        assert_eq!(ranks(&[5.0, 2.0, 9.0, 1.0, 2.0]), vec![4, 2, 5, 1, 3]);
        let s = sample_from(vec![1.0], vec![1.0]);
        assert!(component_ranks(&s).is_err());
    }

    #[test]
    fn partial_sum_examples() {
        let s = sample_from(vec![0.0; 4], vec![0.0; 4]);
        assert_eq!(partial_sum_eps(&s, 1.0).unwrap().values, vec![0.0; 5]);
        let s = sample_from(vec![0.0; 4], vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(partial_sum_eps(&s, 2.0).unwrap().values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let s = Sample::new(vec![0.0; 3], vec![0.3, -1.1, 2.7], 0.9).unwrap();
        let w = partial_sum_eps(&s, 1.7).unwrap();
        assert_eq!(w.end(), (2.7 - 0.9) / 1.7 / 3f64.sqrt());
        assert!(partial_sum_eps(&s, 0.0).is_err());
    }

    #[test]
    fn bridge_hand_example() {
        let r = ReferenceScore::gaussian(0.0).unwrap();
        let (by, bx) = rank_score_bridge(&[1, 2], &[2, 1], &r).unwrap();
        assert_eq!(by.end(), 0.0);
        assert_eq!(bx.end(), 0.0);
        let want = norm_inv(1.0 / 3.0) / 2f64.sqrt();
        assert!((by.values[1] - want).abs() < 1e-15);
    }

    #[test]
    fn ito_examples() {
        let w = StepPath::new(vec![0.0, 0.4, -0.3, 1.1, 0.9]);
        let one = StepPath::new(vec![1.0; 5]);
        assert!((ito_sum(&one, &w).unwrap() - (w.end() - w.values[0])).abs() < 1e-15);
        let v = ito_sum(&w, &w).unwrap();
        let qv: f64 = w.values.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum();
        assert!((v - (w.end().powi(2) - qv) / 2.0).abs() < 1e-14);
        assert_eq!(ito_sum(&StepPath::zeros(4), &w).unwrap(), 0.0);
        assert!(ito_sum(&StepPath::zeros(3), &w).is_err());
    }

    #[test]
    fn zero_path_stats() {
        let z = StepPath::zeros(6);
        assert_eq!(sufficient_stats(&z, &z, &z).unwrap(), SuffStats::ZERO);
    }

    #[test]
    fn residual_nuisance_examples() {
        let s = sample_from(vec![1.0; 10], (0..10).map(|v| (v * v) as f64).collect());
        assert!(matches!(residual_nuisance(&s), Err(Error::DegenerateData(_))));
        let mp = ModelParams { mu: 0.0, sigma_y: 1.0, sigma_x: 1.0, rho: 0.0, ..Default::default() };
        let e = draw_innovations(&InnovationSpec::gaussian(0.0), 100_000, 8).unwrap();
        let s = simulate_sample(&mp, &e);
        let n = residual_nuisance(&s).unwrap();
        assert!((n.sigma_x_hat - 1.0).abs() < 0.02);
        assert!(n.rho_g_hat.abs() < 0.02);
    }

    #[test]
    fn moment_estimates_gaussian() {
        let mp = ModelParams { mu: 0.0, sigma_y: 1.0, sigma_x: 1.0, rho: 0.0, ..Default::default() };
        let e = draw_innovations(&InnovationSpec::gaussian(0.0), 100_000, 12).unwrap();
        let s = simulate_sample(&mp, &e);
        let n = residual_nuisance(&s).unwrap();
        let (ry, rx) = component_ranks(&s).unwrap();
        let r = ReferenceScore::gaussian(0.0).unwrap();
        let (j, sig) = moment_estimates(&n.eps_x_hat, &ry, &rx, &r).unwrap();
        assert!((j[0][0] - 1.0).abs() < 0.03 && (j[1][1] - 1.0).abs() < 0.03 && j[0][1].abs() < 0.03);
        assert!((sig[1] - 1.0).abs() < 0.03 && sig[0].abs() < 0.03);
        let (j, sig) = score_moments(&n.eps_x_hat, &vec![0.0; 100_000], &vec![0.0; 100_000]);
        assert_eq!(j, [[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(sig, [0.0, 0.0]);
    }

    #[test]
    fn ranks_uniform_under_null() {
        // Chi-square over the 24 permutations of T = 4.
        let spec = InnovationSpec::gaussian(-0.5);
        let mp = ModelParams { beta: 0.0, gamma: 1.0, ..Default::default() };
        let mut counts = std::collections::HashMap::new();
        let n = 24_000;
        for seed in 0..n {
            let e = draw_innovations(&spec, 4, seed).unwrap();
            let s = simulate_sample(&mp, &e);
            let (ry, _) = component_ranks(&s).unwrap();
            *counts.entry(ry).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 24);
        let exp = n as f64 / 24.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - exp).powi(2) / exp).sum();
        // 99.9% quantile of chi-square(23) is 49.7.
        assert!(chi2 < 49.7, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn ranks_are_permutations(v in proptest::collection::vec(-5i32..5, 1..40)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let r = ranks(&v);
            let mut sorted = r.clone();
            sorted.sort();
            prop_assert_eq!(sorted, (1..=v.len()).collect::<Vec<_>>());
        }

        #[test]
        fn s4_dominates_s3(inc in proptest::collection::vec(-3.0f64..3.0, 2..60)) {
            let w = StepPath::from_increments(&inc, 0.3);
            let z = StepPath::zeros(inc.len());
            let s = sufficient_stats(&w, &z, &z).unwrap();
            prop_assert!(s.s3 >= 0.0 && s.s4 >= s.s3);
        }

        #[test]
        fn ito_is_bilinear(
            a in proptest::collection::vec(-4i32..4, 8),
            b in proptest::collection::vec(-4i32..4, 8),
            c in proptest::collection::vec(-4i32..4, 8),
            k in -3i32..3,
        ) {
            // Small integers keep every operation exact.
            let p = |v: &Vec<i32>| StepPath::new(v.iter().map(|&x| f64::from(x)).collect());
            let (pa, pb, pc) = (p(&a), p(&b), p(&c));
            let k = f64::from(k);
            let lin = StepPath::new(pa.values.iter().zip(&pb.values).map(|(x, y)| k * x + y).collect());
            prop_assert_eq!(
                ito_sum(&lin, &pc).unwrap(),
                k * ito_sum(&pa, &pc).unwrap() + ito_sum(&pb, &pc).unwrap()
            );
            prop_assert_eq!(
                ito_sum(&pc, &lin).unwrap(),
                k * ito_sum(&pc, &pa).unwrap() + ito_sum(&pc, &pb).unwrap()
            );
        }

        #[test]
        fn bridge_ends_at_zero(inc in proptest::collection::vec(-1e3f64..1e3, 1..80)) {
            let b = bridge(&StepPath::from_increments(&inc, 0.77));
            prop_assert_eq!(b.end(), 0.0);
        }
    }
}
