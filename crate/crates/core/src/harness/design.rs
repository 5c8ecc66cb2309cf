//! Population limit-experiment covariances for simulation designs, and the
//! mapping from local parameters to a simulated sample.

use serde::{Deserialize, Serialize};

use crate::dgp::{InnovationFamily, InnovationSampler, InnovationSpec, MarginalLaw, ModelParams, Sample};
use crate::error::{Error, Result};
use crate::limit::LimitCov;
use crate::numeric::{correlation, mat2_inv, mat2_mul, tanh_sinh, Mat2};
use crate::reference::{combine_scores, norm_inv, pseudo_info_from, Marginal, ReferenceKind};
use crate::rng::{SeedStream, SimRng};

/// Location and scale parameters shared by the simulation configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma_y: f64,
    #[serde(default = "default_sigma")]
    pub sigma_x: f64,
    #[serde(default)]
    pub x0: f64,
}

fn default_mu() -> f64 {
    2.0
}

fn default_sigma() -> f64 {
    3.0
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            mu: default_mu(),
            sigma_y: default_sigma(),
            sigma_x: default_sigma(),
            x0: 0.0,
        }
    }
}

/// Standard deviations of the unit-scale innovations `(ε^y, ε^x)`, including
/// the unconditional GARCH scale when one applies.
pub fn innovation_sds(sampler: &InnovationSampler) -> [f64; 2] {
    let m = sampler.marginals();
    let mut sd = [m[0].sd(), m[1].sd()];
    if let Some(g) = &sampler.spec().garch {
        let p = g.alpha1 + g.beta1;
        if g.square_lagged && p < 1.0 {
            let h = (g.omega / (1.0 - p)).sqrt();
            sd[0] *= h;
            if matches!(g.applies_to, crate::dgp::GarchTarget::Both) {
                sd[1] *= h;
            }
        }
    }
    sd
}

/// Global parameters for local `(b, c)` at sample size `t`. The slope uses
/// the innovation standard deviations, so `b` is measured in the units of
/// the limit experiment whatever the innovation family.
pub fn design_params(b: f64, c: f64, t: usize, model: &ModelSpec, sampler: &InnovationSampler) -> Result<ModelParams> {
    if t == 0 {
        return Err(Error::Config("T must be positive".into()));
    }
    if c > 0.0 {
        return Err(Error::Domain(format!("c = {c} must be <= 0")));
    }
    let sd = innovation_sds(sampler);
    let tf = t as f64;
    let mp = ModelParams {
        mu: model.mu,
        beta: b / tf * (model.sigma_y * sd[0]) / (model.sigma_x * sd[1]),
        gamma: 1.0 + c / tf,
        sigma_y: model.sigma_y,
        sigma_x: model.sigma_x,
        rho: sampler.spec().rho,
        x0: model.x0,
    };
    mp.validate()?;
    Ok(mp)
}

/// Simulates one sample of length `t` from `rng`.
pub fn simulate_design(
    b: f64,
    c: f64,
    t: usize,
    model: &ModelSpec,
    sampler: &InnovationSampler,
    rng: &mut SimRng,
) -> Result<Sample> {
    let mp = design_params(b, c, t, model, sampler)?;
    Ok(crate::dgp::simulate_sample(&mp, &sampler.draw(t, rng)))
}

/// Population quantities of a design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignCov {
    pub cov: LimitCov,
    /// Population normal-scores correlation, the probability limit of the
    /// reference correlation estimate.
    pub rho_g: f64,
}

/// Score of the variance-standardized reference at an innovation draw.
fn law_score(reference: &Marginal, law: &MarginalLaw, e: f64) -> f64 {
    reference.sd()
        * match (reference, law) {
            (Marginal::Gaussian, MarginalLaw::Normal) => e,
            (Marginal::StudentT { nu }, MarginalLaw::StudentT(n2)) if nu == n2 => reference.score_x(e),
            _ => reference.score(law.cdf(e).clamp(1e-300, 1.0 - 1e-16)),
        }
}

fn normal_score(law: &MarginalLaw, e: f64) -> f64 {
    match law {
        MarginalLaw::Normal => e,
        _ => norm_inv(law.cdf(e).clamp(1e-300, 1.0 - 1e-16)),
    }
}

/// `a = s v ∫₀¹ ψ'(G⁻¹(u)) f(F⁻¹(u)) / g(G⁻¹(u)) du`, the derivative of the
/// expected variance-standardized reference score (`s = sd(g)`) under a
/// shift of one innovation standard deviation `v`.
pub fn drift_sensitivity(reference: &Marginal, law: &MarginalLaw) -> f64 {
    let same = matches!(
        (reference, law),
        (Marginal::Gaussian, MarginalLaw::Normal)
    ) || matches!((reference, law), (Marginal::StudentT { nu }, MarginalLaw::StudentT(n2)) if nu == n2);
    let integral = if same {
        tanh_sinh(|u| reference.score_derivative_x(reference.quantile(u)), 0.0, 1.0)
    } else {
        tanh_sinh(
            |u| {
                let gx = reference.quantile(u);
                let g = reference.pdf(gx);
                if !(g > 0.0) {
                    return 0.0;
                }
                reference.score_derivative_x(gx) * law.pdf(law.quantile(u)) / g
            },
            0.0,
            1.0,
        )
    };
    reference.sd() * law.sd() * integral
}

/// Population `LimitCov` for innovations `spec` tested with reference
/// marginals `kind`, from `n` population draws.
///
/// Gaussian innovations with a Gaussian reference use the closed form. With a
/// GARCH layer the moments are taken over one stationary path of length `n`.
pub fn population_limit_cov(spec: &InnovationSpec, kind: ReferenceKind, n: usize, seed: u64) -> Result<DesignCov> {
    spec.validate()?;
    let Some(reference) = Marginal::from_kind(kind) else {
        return Err(Error::Config(
            "population covariances need a fixed reference (gaussian or t3)".into(),
        ));
    };
    if spec.garch.is_none() && spec.family == InnovationFamily::Gaussian && kind == ReferenceKind::Gaussian {
        return Ok(DesignCov {
            cov: LimitCov::gaussian(spec.rho)?,
            rho_g: spec.rho,
        });
    }
    if n < 1000 {
        return Err(Error::Config(format!("population draws must be at least 1000, got {n}")));
    }
    if spec.garch.is_some() {
        return path_limit_cov(spec, &reference, n, seed);
    }
    let plain = InnovationSpec {
        garch: None,
        ..spec.clone()
    };
    let sampler = InnovationSampler::new(&plain)?;
    let laws = sampler.marginals().clone();
    let mut rng = SeedStream::new(seed).rng(0);
    let draws = sampler.draw_iid(n, spec.rho, &mut rng);

    let zy: Vec<f64> = draws.iter().map(|e| normal_score(&laws[0], e[0])).collect();
    let zx: Vec<f64> = draws.iter().map(|e| normal_score(&laws[1], e[1])).collect();
    let rho_g = correlation(&zy, &zx);

    let (ly, lx): (Vec<f64>, Vec<f64>) = draws
        .iter()
        .map(|e| {
            combine_scores(
                law_score(&reference, &laws[0], e[0]),
                law_score(&reference, &laws[1], e[1]),
                rho_g,
            )
        })
        .unzip();
    let ex: Vec<f64> = draws.iter().map(|e| e[1] / laws[1].sd()).collect();
    let (j_g, sigma_eg) = crate::processes::score_moments(&ex, &ly, &lx);

    let a = [drift_sensitivity(&reference, &laws[0]), drift_sensitivity(&reference, &laws[1])];
    let r_inv = mat2_inv(&[[1.0, rho_g], [rho_g, 1.0]])?;
    let j_gf: Mat2 = mat2_mul(&r_inv, &[[a[0], 0.0], [0.0, a[1]]]);
    let info = reference.info() * reference.sd().powi(2);
    let j_pseudo = pseudo_info_from(info, info, rho_g)?;
    Ok(DesignCov {
        cov: LimitCov {
            sigma_eg,
            j_g,
            j_gf,
            j_pseudo,
        },
        rho_g,
    })
}

/// Relative half-width, in innovation standard deviations, of the central
/// difference used for the drift loadings of a GARCH design.
const DRIFT_STEP: f64 = 0.05;

/// Moments over one stationary path, with the unconditional marginals replaced
/// by the path's empirical distribution.
fn path_limit_cov(spec: &InnovationSpec, reference: &Marginal, n: usize, seed: u64) -> Result<DesignCov> {
    let sampler = InnovationSampler::new(spec)?;
    let mut rng = SeedStream::new(seed).rng(0);
    let path = sampler.draw(n, &mut rng);
    let comp = |j: usize| -> Vec<f64> { path.iter().map(|e| e[j]).collect() };
    let (ey, ex) = (comp(0), comp(1));
    let (ry, rx) = (crate::processes::ranks(&ey), crate::processes::ranks(&ex));
    let rho_g = crate::processes::normal_scores_correlation(&ry, &rx);

    let nf = n as f64 + 1.0;
    let s = reference.sd();
    let psi = |u: f64| s * reference.score(u);
    let (ly, lx): (Vec<f64>, Vec<f64>) = ry
        .iter()
        .zip(&rx)
        .map(|(&a, &b)| combine_scores(psi(a as f64 / nf), psi(b as f64 / nf), rho_g))
        .unzip();
    let sd_x = sample_sd(&ex);
    let ex_std: Vec<f64> = ex.iter().map(|e| e / sd_x).collect();
    let (j_g, sigma_eg) = crate::processes::score_moments(&ex_std, &ly, &lx);

    let a = [empirical_drift(&ey, &psi), empirical_drift(&ex, &psi)];
    let r_inv = mat2_inv(&[[1.0, rho_g], [rho_g, 1.0]])?;
    let j_gf: Mat2 = mat2_mul(&r_inv, &[[a[0], 0.0], [0.0, a[1]]]);
    let info = reference.info() * s * s;
    let j_pseudo = pseudo_info_from(info, info, rho_g)?;
    Ok(DesignCov {
        cov: LimitCov {
            sigma_eg,
            j_g,
            j_gf,
            j_pseudo,
        },
        rho_g,
    })
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `v · d/dδ E ψ(F(e + δ))` at `δ = 0` by a central difference, with `F` the
/// empirical distribution of `e` and `v` its standard deviation.
fn empirical_drift(e: &[f64], psi: &impl Fn(f64) -> f64) -> f64 {
    let mut sorted = e.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = e.len() as f64 + 1.0;
    let cdf = |z: f64| {
        let k = sorted.partition_point(|&v| v <= z) as f64;
        k.clamp(1.0, nf - 1.0) / nf
    };
    let h = DRIFT_STEP * sample_sd(e);
    let diff: f64 = e.iter().map(|&v| psi(cdf(v + h)) - psi(cdf(v - h))).sum();
    diff / e.len() as f64 / (2.0 * DRIFT_STEP)
}
