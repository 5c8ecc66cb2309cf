//! The switching rank test on observed data, its standard-regime fallback,
//! and the Gaussian quasi-likelihood baseline.

use serde::{Deserialize, Serialize};

use crate::alfd::{np_mixture_stat, AlfdCalibration};
use crate::dgp::Sample;
use crate::error::{Error, Result};
use crate::numeric::Mat2;
use crate::processes::{
    component_ranks, normal_scores_correlation, ranks, partial_sum_eps, rank_score_bridge, residual_nuisance, score_bridges,
    score_moments, sufficient_stats, SuffStats,
};
use crate::reference::{combine_scores, estimate_reference_kde, norm_inv, Marginal, ReferenceKind, ReferenceScore};

/// Default switching threshold on `c*`.
pub const DEFAULT_K: f64 = -130.0;
/// Smallest sample accepted by [`wz_test`] and [`emw_test`].
pub const MIN_OBS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nonstandard,
    Standard,
}

/// Nuisance estimates recorded with a decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceReport {
    pub rho_g_hat: f64,
    pub sigma_x_hat: f64,
    #[serde(rename = "J_g_hat")]
    pub j_g_hat: Mat2,
    pub sigma_eg_hat: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestDecision {
    pub reject: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub regime: Regime,
    pub c_star: f64,
    pub b_star: f64,
    pub sigma_b_star: f64,
    pub stats: SuffStats,
    pub nuisance: NuisanceReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardEstimates {
    pub b_star: f64,
    pub c_star: f64,
    pub sigma_b_star: f64,
}

/// Outcome of the t-type test used far from unity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardOutcome {
    pub estimates: StandardEstimates,
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestOptions {
    pub alpha: f64,
    /// Switch to the standard test when `c* < k`.
    pub k: f64,
    /// Relative deviation of `Ĵ_g` from the calibration's `J_g` above which
    /// a warning is logged.
    pub warn_tolerance: f64,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            k: DEFAULT_K,
            warn_tolerance: 0.25,
        }
    }
}

impl TestOptions {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if !self.k.is_finite() {
            return Err(Error::Config("K must be finite".into()));
        }
        Ok(())
    }
}

/// Reference density used by [`wz_test`]. The reference correlation is
/// always estimated from the data.
#[derive(Debug, Clone)]
pub enum Reference {
    /// Fixed marginals; the score table cache is shared across calls.
    Fixed(ReferenceScore),
    /// Kernel density estimates of the residual marginals.
    Kde,
}

impl Reference {
    pub fn from_kind(kind: ReferenceKind) -> Self {
        match Marginal::from_kind(kind) {
            Some(m) => Reference::Fixed(
                ReferenceScore::standardized(m.clone(), m, 0.0).expect("fixed marginals have finite variance and information"),
            ),
            None => Reference::Kde,
        }
    }

    pub fn gaussian() -> Self {
        Self::from_kind(ReferenceKind::Gaussian)
    }
}

/// `b* = (S_1 + ρ S_2)/(S_3 J_y)`, `c* = (S_2 - ρ S_1)/(S_3 J_x)`,
/// `σ_{b*} = (S_3 J_y)^{-1/2}`.
pub fn standard_estimates(stats: &SuffStats, reference: &ReferenceScore) -> Result<StandardEstimates> {
    estimates_with(stats, reference.rho_g, reference.info_y(), reference.info_x())
}

fn estimates_with(stats: &SuffStats, rho: f64, info_y: f64, info_x: f64) -> Result<StandardEstimates> {
    if !(stats.s3 > 0.0) {
        return Err(Error::DegenerateData("the regressor path has zero sample variance".into()));
    }
    Ok(StandardEstimates {
        b_star: (stats.s1 + rho * stats.s2) / (stats.s3 * info_y),
        c_star: (stats.s2 - rho * stats.s1) / (stats.s3 * info_x),
        sigma_b_star: (1.0 / (stats.s3 * info_y)).sqrt(),
    })
}

/// Rejects when `b*/σ_{b*} > z_{1-α}`.
pub fn standard_test(stats: &SuffStats, reference: &ReferenceScore, alpha: f64) -> Result<StandardOutcome> {
    standard_outcome(standard_estimates(stats, reference)?, alpha)
}

fn standard_outcome(estimates: StandardEstimates, alpha: f64) -> Result<StandardOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let statistic = estimates.b_star / estimates.sigma_b_star;
    let threshold = norm_inv(1.0 - alpha);
    Ok(StandardOutcome {
        estimates,
        statistic,
        threshold,
        reject: statistic > threshold,
    })
}

struct Pieces {
    stats: SuffStats,
    rho: f64,
    info: [f64; 2],
    nuisance: NuisanceReport,
}

fn decide(p: Pieces, cal: &AlfdCalibration, opts: &TestOptions) -> Result<TestDecision> {
    let est = estimates_with(&p.stats, p.rho, p.info[0], p.info[1])?;
    warn_if_far(&p.nuisance.j_g_hat, &cal.cov.j_g, opts.warn_tolerance);
    let (regime, statistic, threshold) = if est.c_star < opts.k {
        let out = standard_outcome(est, opts.alpha)?;
        (Regime::Standard, out.statistic, out.threshold)
    } else {
        if (cal.alpha - opts.alpha).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "calibration was built for alpha = {}, test requested alpha = {}",
                cal.alpha, opts.alpha
            )));
        }
        (Regime::Nonstandard, np_mixture_stat(&p.stats, cal)?, cal.log_kappa)
    };
    Ok(TestDecision {
        reject: statistic > threshold,
        statistic,
        threshold,
        regime,
        c_star: est.c_star,
        b_star: est.b_star,
        sigma_b_star: est.sigma_b_star,
        stats: p.stats,
        nuisance: p.nuisance,
    })
}

fn warn_if_far(est: &Mat2, cal: &Mat2, tol: f64) {
    let diff: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (est[i][j] - cal[i][j]).powi(2)).sum();
    let norm: f64 = cal.iter().flatten().map(|v| v * v).sum();
    let rel = (diff / norm).sqrt();
    if rel > tol {
        log::warn!("estimated J_g deviates from the calibration's J_g by {:.0}%", 100.0 * rel);
    }
}

fn check_len(sample: &Sample) -> Result<()> {
    if sample.len() < MIN_OBS {
        return Err(Error::InsufficientData {
            needed: MIN_OBS,
            got: sample.len(),
        });
    }
    Ok(())
}

/// The rank-based switching test.
///
/// In the nonstandard regime the statistic depends on the data only through
/// the ranks of `(y_t, Δx_t)` and the x-path, so it is unchanged by location
/// shifts of either series and by increasing transforms of `y`.
pub fn wz_test(sample: &Sample, reference: &Reference, cal: &AlfdCalibration, opts: &TestOptions) -> Result<TestDecision> {
    opts.validate()?;
    check_len(sample)?;
    let nuis = residual_nuisance(sample)?;
    let (r_y, r_x) = component_ranks(sample)?;
    // The x side uses the AR(1) residuals, not Δx, so the estimate stays
    // consistent when the regressor is far from a unit root.
    let rho = normal_scores_correlation(&r_y, &ranks(&nuis.eps_x_hat));
    if !(rho.abs() < 1.0) {
        return Err(Error::DegenerateData(format!("normal-scores correlation {rho} is not in (-1, 1)")));
    }
    let score = match reference {
        Reference::Fixed(r) => {
            // Fill the shared cache before cloning it into the ρ-adjusted copy.
            r.rank_scores(sample.len());
            r.with_rho(rho)?
        }
        Reference::Kde => ReferenceScore::standardized(
            estimate_reference_kde(&nuis.eps_y_hat)?,
            estimate_reference_kde(&nuis.eps_x_hat)?,
            rho,
        )?,
    };
    let w = partial_sum_eps(sample, nuis.sigma_x_hat)?;
    let (by, bx) = rank_score_bridge(&r_y, &r_x, &score)?;
    let stats = sufficient_stats(&w, &by, &bx)?;
    let tab = score.rank_scores(sample.len());
    let (ly, lx): (Vec<f64>, Vec<f64>) = r_y
        .iter()
        .zip(&r_x)
        .map(|(&a, &b)| combine_scores(tab[0][a - 1], tab[1][b - 1], rho))
        .unzip();
    let (j_g_hat, sigma_eg_hat) = score_moments(&nuis.eps_x_hat, &ly, &lx);
    decide(
        Pieces {
            stats,
            rho,
            info: [score.info_y(), score.info_x()],
            nuisance: NuisanceReport {
                rho_g_hat: rho,
                sigma_x_hat: nuis.sigma_x_hat,
                j_g_hat,
                sigma_eg_hat,
            },
        },
        cal,
        opts,
    )
}

/// Gaussian quasi-likelihood baseline: the same pipeline driven by
/// standardized residuals instead of ranks. `cal` should be a Gaussian
/// calibration.
pub fn emw_test(sample: &Sample, cal: &AlfdCalibration, opts: &TestOptions) -> Result<TestDecision> {
    opts.validate()?;
    check_len(sample)?;
    let nuis = residual_nuisance(sample)?;
    let rho = nuis.rho_g_hat;
    if !(rho.abs() < 1.0) {
        return Err(Error::DegenerateData(format!("residual correlation {rho} is not in (-1, 1)")));
    }
    let t = sample.len() as f64;
    let sd_y = (nuis.eps_y_hat.iter().map(|e| e * e).sum::<f64>() / (t - 1.0)).sqrt();
    let (ly, lx): (Vec<f64>, Vec<f64>) = nuis
        .eps_y_hat
        .iter()
        .zip(sample.dx())
        .map(|(ey, dx)| combine_scores(ey / sd_y, dx / nuis.sigma_x_hat, rho))
        .unzip();
    let w = partial_sum_eps(sample, nuis.sigma_x_hat)?;
    let (by, bx) = score_bridges(&ly, &lx);
    let stats = sufficient_stats(&w, &by, &bx)?;
    let (j_g_hat, sigma_eg_hat) = score_moments(&nuis.eps_x_hat, &ly, &lx);
    decide(
        Pieces {
            stats,
            rho,
            info: [1.0, 1.0],
            nuisance: NuisanceReport {
                rho_g_hat: rho,
                sigma_x_hat: nuis.sigma_x_hat,
                j_g_hat,
                sigma_eg_hat,
            },
        },
        cal,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{draw_innovations, local_to_global, simulate_sample, InnovationSpec, LocalParams, ModelParams};

    fn gauss(rho: f64) -> ReferenceScore {
        ReferenceScore::gaussian(rho).unwrap()
    }

    fn toy_cal() -> AlfdCalibration {
        crate::alfd::toy_calibration()
    }

    fn sample(t: usize, c: f64, seed: u64) -> Sample {
        let mp = local_to_global(LocalParams { b: 0.0, c, t }, ModelParams::default()).unwrap();
        let e = draw_innovations(&InnovationSpec::gaussian(-0.5), t, seed).unwrap();
        simulate_sample(&mp, &e)
    }

    #[test]
    fn standard_estimate_examples() {
        let e = standard_estimates(&SuffStats { s1: 0.0, s2: 0.0, s3: 1.0, s4: 1.0 }, &gauss(0.3)).unwrap();
        assert_eq!((e.b_star, e.c_star), (0.0, 0.0));
        let e = standard_estimates(&SuffStats { s1: 1.0, s2: 0.0, s3: 1.0, s4: 1.0 }, &gauss(0.0)).unwrap();
        assert_eq!((e.b_star, e.sigma_b_star), (1.0, 1.0));
        let e = standard_estimates(&SuffStats { s1: 1.0, s2: 2.0, s3: 2.0, s4: 2.0 }, &gauss(0.5)).unwrap();
        assert_eq!((e.b_star, e.c_star), (1.0, 0.75));
        assert!(matches!(
            standard_estimates(&SuffStats::ZERO, &gauss(0.0)),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn standard_test_boundary() {
        let r = gauss(0.0);
        let at = |z: f64| SuffStats { s1: z, s2: 0.0, s3: 1.0, s4: 1.0 };
        assert!(!standard_test(&at(1.644), &r, 0.05).unwrap().reject);
        assert!(standard_test(&at(1.646), &r, 0.05).unwrap().reject);
    }

    #[test]
    fn short_samples_are_rejected() {
        let s = sample(29, 0.0, 1);
        let err = wz_test(&s, &Reference::gaussian(), &toy_cal(), &TestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { needed: 30, got: 29 }));
        assert!(emw_test(&s, &toy_cal(), &TestOptions::default()).is_err());
    }

    #[test]
    fn exact_invariance_in_nonstandard_regime() {
        let cal = toy_cal();
        let opts = TestOptions {
            k: f64::NEG_INFINITY.max(-1e300),
            ..TestOptions::default()
        };
        let s = sample(128, -5.0, 7);
        let base = wz_test(&s, &Reference::gaussian(), &cal, &opts).unwrap();
        assert_eq!(base.regime, Regime::Nonstandard);
        let exp_y = Sample::new(s.y.iter().map(|v| v.exp()).collect(), s.x.clone(), s.x0).unwrap();
        let y_shift = Sample::new(s.y.iter().map(|v| v + 0.5).collect(), s.x.clone(), s.x0).unwrap();
        let x_shift = Sample::new(s.y.clone(), s.x.iter().map(|v| v + 0.25).collect(), s.x0 + 0.25).unwrap();
        for other in [exp_y, y_shift] {
            let d = wz_test(&other, &Reference::gaussian(), &cal, &opts).unwrap();
            assert_eq!(d.statistic, base.statistic);
            assert_eq!(d.stats, base.stats);
        }
        // With dyadic data the shift is exact in floating point.
        let dy: Vec<f64> = s.y.iter().map(|v| (v * 256.0).round() / 256.0).collect();
        let dx: Vec<f64> = s.x.iter().map(|v| (v * 256.0).round() / 256.0).collect();
        let d0 = Sample::new(dy.clone(), dx.clone(), 0.0).unwrap();
        let d1 = Sample::new(dy, dx.iter().map(|v| v + 4.0).collect(), 4.0).unwrap();
        let a = wz_test(&d0, &Reference::gaussian(), &cal, &opts).unwrap();
        let b = wz_test(&d1, &Reference::gaussian(), &cal, &opts).unwrap();
        assert_eq!(a.statistic, b.statistic);
        let c = wz_test(&x_shift, &Reference::gaussian(), &cal, &opts).unwrap();
        assert!((c.statistic - base.statistic).abs() < 1e-9);
    }

    #[test]
    fn far_from_unity_uses_standard_regime() {
        let cal = toy_cal();
        let opts = TestOptions::default();
        let frac = |gamma: f64| {
            (0..60)
                .filter(|&i| {
                    let mp = ModelParams {
                        gamma,
                        ..ModelParams::default()
                    };
                    let e = draw_innovations(&InnovationSpec::gaussian(-0.5), 200, 100 + i).unwrap();
                    let d = wz_test(&simulate_sample(&mp, &e), &Reference::gaussian(), &cal, &opts).unwrap();
                    d.regime == Regime::Standard
                })
                .count()
        };
        let (a, b, c) = (frac(0.95), frac(0.5), frac(0.0));
        assert!(a <= b && b <= c, "{a} {b} {c}");
        assert!(c >= 57, "{c}");
    }

    #[test]
    fn decisions_serialize() {
        let d = emw_test(&sample(100, -2.0, 3), &toy_cal(), &TestOptions::default()).unwrap();
        let js = serde_json::to_string(&d).unwrap();
        assert!(js.contains("\"regime\""));
        let back: TestDecision = serde_json::from_str(&js).unwrap();
        assert_eq!(back, d);
        assert!(d.threshold.is_finite());
    }

    #[test]
    fn kde_reference_runs() {
        let d = wz_test(&sample(200, -10.0, 4), &Reference::Kde, &toy_cal(), &TestOptions::default()).unwrap();
        assert!(d.statistic.is_finite());
    }
}
