//! Data generating process: the predictive regression
//! `y_t = μ + β x_{t-1} + ε^y_t`, `x_t = γ x_{t-1} + ε^x_t`, its local
//! reparametrisation and the innovation designs used in the simulations.

mod pearson;
mod sample;

pub use pearson::PearsonMarginal;
pub use sample::Sample;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::{norm_cdf, norm_inv, norm_pdf};
use crate::rng::{SeedStream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma_y: f64,
    pub sigma_x: f64,
    pub rho: f64,
    #[serde(default)]
    pub x0: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_y > 0.0 && self.sigma_x > 0.0) {
            return Err(Error::Config("sigma_y and sigma_x must be positive".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::Config(format!("rho = {} must lie in (-1, 1)", self.rho)));
        }
        if !(self.gamma > -1.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma = {} must lie in (-1, 1]", self.gamma)));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 2.0,
            beta: 0.0,
            gamma: 1.0,
            sigma_y: 3.0,
            sigma_x: 3.0,
            rho: -0.5,
            x0: 0.0,
        }
    }
}

/// Local parameters `(b, c)` at sample size `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalParams {
    pub b: f64,
    pub c: f64,
    pub t: usize,
}

/// Substitutes `β = (b/T)(σ_y/σ_x)` and `γ = 1 + c/T` into `mp`.
pub fn local_to_global(lp: LocalParams, mp: ModelParams) -> Result<ModelParams> {
    if lp.t == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    if lp.c > 0.0 {
        return Err(Error::Domain(format!("local persistence c = {} must be <= 0", lp.c)));
    }
    let t = lp.t as f64;
    let gamma = 1.0 + lp.c / t;
    if gamma <= -1.0 {
        return Err(Error::Domain(format!(
            "c = {} at T = {} gives gamma = {gamma} <= -1",
            lp.c, lp.t
        )));
    }
    Ok(ModelParams {
        beta: lp.b / t * (mp.sigma_y / mp.sigma_x),
        gamma,
        ..mp
    })
}

/// Innovation distribution families. All marginals have unit scale
/// (not necessarily unit variance); see [`InnovationFamily::marginals`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnovationFamily {
    Gaussian,
    /// Bivariate Student-t with `nu` degrees of freedom and unit scale.
    StudentT { nu: f64 },
    GaussianCopulaLaplace,
    /// Gaussian copula with standardized Pearson marginals.
    Pearson { skew: f64, kurt: f64 },
    /// Gaussian copula, `t_3` for y and Gaussian for x.
    GaussianCopulaT3Gauss,
    /// `t_3` copula, Gaussian for y and `t_3` for x.
    T3CopulaGaussT3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GarchTarget {
    YOnly,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarchSpec {
    pub omega: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub applies_to: GarchTarget,
    /// Use `ε²_{t-1}` in the variance recursion. `false` gives the literal
    /// `ω + α ε_{t-1} + β h_{t-1}` form, clamped at a small positive floor.
    #[serde(default = "default_true")]
    pub square_lagged: bool,
}

fn default_true() -> bool {
    true
}

impl GarchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.alpha1 >= 0.0 && self.beta1 >= 0.0) {
            return Err(Error::Config(
                "GARCH requires omega > 0 and nonnegative alpha1, beta1".into(),
            ));
        }
        if self.alpha1 + self.beta1 >= 1.0 {
            log::warn!(
                "GARCH alpha1 + beta1 = {} >= 1: not covariance stationary",
                self.alpha1 + self.beta1
            );
        }
        Ok(())
    }

    fn initial_variance(&self) -> f64 {
        let persistence = self.alpha1 + self.beta1;
        if persistence < 1.0 {
            self.omega / (1.0 - persistence)
        } else {
            self.omega
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationSpec {
    pub family: InnovationFamily,
    pub rho: f64,
    #[serde(default)]
    pub garch: Option<GarchSpec>,
}

impl InnovationSpec {
    pub fn gaussian(rho: f64) -> Self {
        Self {
            family: InnovationFamily::Gaussian,
            rho,
            garch: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) {
            return Err(Error::Config(format!("innovation rho = {} must lie in (-1, 1)", self.rho)));
        }
        if let InnovationFamily::StudentT { nu } = self.family {
            if !(nu > 2.0) {
                return Err(Error::Config(format!("student_t requires nu > 2, got {nu}")));
            }
        }
        if let Some(g) = &self.garch {
            g.validate()?;
        }
        Ok(())
    }
}

/// A univariate unit-scale marginal law.
#[derive(Debug, Clone)]
pub enum MarginalLaw {
    Normal,
    StudentT(f64),
    Laplace,
    Pearson(PearsonMarginal),
}

impl MarginalLaw {
    pub fn sd(&self) -> f64 {
        match self {
            MarginalLaw::Normal | MarginalLaw::Pearson(_) => 1.0,
            MarginalLaw::StudentT(nu) => (nu / (nu - 2.0)).sqrt(),
            MarginalLaw::Laplace => std::f64::consts::SQRT_2,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            MarginalLaw::Normal => norm_pdf(x),
            MarginalLaw::StudentT(nu) => crate::reference::student_t_pdf(*nu, x),
            MarginalLaw::Laplace => 0.5 * (-x.abs()).exp(),
            MarginalLaw::Pearson(p) => p.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginalLaw::Normal => norm_cdf(x),
            MarginalLaw::StudentT(nu) => crate::reference::student_t_cdf(*nu, x),
            MarginalLaw::Laplace => {
                if x < 0.0 {
                    0.5 * x.exp()
                } else {
                    1.0 - 0.5 * (-x).exp()
                }
            }
            MarginalLaw::Pearson(p) => p.cdf(x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            MarginalLaw::Normal => norm_inv(u),
            MarginalLaw::StudentT(nu) => crate::reference::student_t_quantile(*nu, u),
            MarginalLaw::Laplace => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            MarginalLaw::Pearson(p) => p.quantile(u),
        }
    }
}

/// Reusable sampler for an [`InnovationSpec`]; building it once avoids
/// re-tabulating Pearson marginals for every replication.
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    spec: InnovationSpec,
    marginals: [MarginalLaw; 2],
}

impl InnovationSampler {
    pub fn new(spec: &InnovationSpec) -> Result<Self> {
        spec.validate()?;
        let marginals = match &spec.family {
            InnovationFamily::Gaussian => [MarginalLaw::Normal, MarginalLaw::Normal],
            InnovationFamily::StudentT { nu } => [MarginalLaw::StudentT(*nu), MarginalLaw::StudentT(*nu)],
            InnovationFamily::GaussianCopulaLaplace => [MarginalLaw::Laplace, MarginalLaw::Laplace],
            InnovationFamily::Pearson { skew, kurt } => {
                let p = PearsonMarginal::new(*skew, *kurt)?;
                [MarginalLaw::Pearson(p.clone()), MarginalLaw::Pearson(p)]
            }
            InnovationFamily::GaussianCopulaT3Gauss => [MarginalLaw::StudentT(3.0), MarginalLaw::Normal],
            InnovationFamily::T3CopulaGaussT3 => [MarginalLaw::Normal, MarginalLaw::StudentT(3.0)],
        };
        Ok(Self {
            spec: spec.clone(),
            marginals,
        })
    }

    pub fn spec(&self) -> &InnovationSpec {
        &self.spec
    }

    /// Marginal laws of `(ε^y, ε^x)` before any GARCH filtering.
    pub fn marginals(&self) -> &[MarginalLaw; 2] {
        &self.marginals
    }

    /// One i.i.d. pair with dependence parameter `rho`.
    pub fn draw_pair(&self, rho: f64, rng: &mut SimRng) -> [f64; 2] {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let zy = z1;
        let zx = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
        match &self.spec.family {
            InnovationFamily::Gaussian => [zy, zx],
            InnovationFamily::StudentT { nu } => {
                let w = chi2_over_nu(*nu, rng);
                [zy / w, zx / w]
            }
            InnovationFamily::GaussianCopulaLaplace
            | InnovationFamily::Pearson { .. }
            | InnovationFamily::GaussianCopulaT3Gauss => [
                self.marginals[0].quantile(norm_cdf(zy)),
                self.marginals[1].quantile(norm_cdf(zx)),
            ],
            InnovationFamily::T3CopulaGaussT3 => {
                let w = chi2_over_nu(3.0, rng);
                let (ty, tx) = (zy / w, zx / w);
                let uy = crate::reference::student_t_cdf(3.0, ty);
                [norm_inv(uy.clamp(1e-300, 1.0 - 1e-16)), tx]
            }
        }
    }

    /// `t` i.i.d. pairs with dependence parameter `rho`.
    pub fn draw_iid(&self, t: usize, rho: f64, rng: &mut SimRng) -> Vec<[f64; 2]> {
        (0..t).map(|_| self.draw_pair(rho, rng)).collect()
    }

    /// Full innovation sequence including the optional GARCH layer.
    ///
    /// With GARCH, independent components `ν_1, ν_2` are drawn, filtered and
    /// then mixed as `ε^y = √(1-ρ²)ε_1 + ρε_2`, `ε^x = ε_2`.
    pub fn draw(&self, t: usize, rng: &mut SimRng) -> Vec<[f64; 2]> {
        match &self.spec.garch {
            None => self.draw_iid(t, self.spec.rho, rng),
            Some(g) => {
                let raw = self.draw_iid(t, 0.0, rng);
                let filtered = apply_garch(&raw, g);
                mix_components(&filtered, self.spec.rho)
            }
        }
    }
}

fn chi2_over_nu(nu: f64, rng: &mut SimRng) -> f64 {
    let chi = ChiSquared::new(nu).expect("nu validated positive");
    (chi.sample(rng) / nu).sqrt()
}

/// `T` i.i.d. innovation pairs, before any GARCH filtering, from stream 0 of
/// `seed`.
pub fn draw_innovations(spec: &InnovationSpec, t: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if t == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    let sampler = InnovationSampler::new(spec)?;
    let mut rng = SeedStream::new(seed).rng(0);
    Ok(sampler.draw_iid(t, spec.rho, &mut rng))
}

/// One step of the GARCH(1,1) variance recursion.
pub fn garch_variance_step(spec: &GarchSpec, eps_prev: f64, h_prev: f64) -> f64 {
    let shock = if spec.square_lagged { eps_prev * eps_prev } else { eps_prev };
    let h = spec.omega + spec.alpha1 * shock + spec.beta1 * h_prev;
    h.max(1e-12 * spec.omega)
}

/// Filters the components selected by `spec.applies_to` through
/// `ε_t = ν_t √h_t`; other components pass through unchanged.
pub fn apply_garch(raw: &[[f64; 2]], spec: &GarchSpec) -> Vec<[f64; 2]> {
    let components: &[usize] = match spec.applies_to {
        GarchTarget::YOnly => &[0],
        GarchTarget::Both => &[0, 1],
    };
    let mut out = raw.to_vec();
    for &j in components {
        let mut h = spec.initial_variance();
        for t in 0..raw.len() {
            if t > 0 {
                h = garch_variance_step(spec, out[t - 1][j], h);
            }
            out[t][j] = raw[t][j] * h.sqrt();
        }
    }
    out
}

/// `(√(1-ρ²)e_1 + ρe_2, e_2)`.
pub fn mix_components(e: &[[f64; 2]], rho: f64) -> Vec<[f64; 2]> {
    let s = (1.0 - rho * rho).sqrt();
    e.iter().map(|p| [s * p[0] + rho * p[1], p[1]]).collect()
}

/// Runs the recursions with scales `σ_y`, `σ_x` applied to the innovations.
pub fn simulate_sample(mp: &ModelParams, innovations: &[[f64; 2]]) -> Sample {
    let t = innovations.len();
    let mut y = Vec::with_capacity(t);
    let mut x = Vec::with_capacity(t);
    let mut prev = mp.x0;
    for e in innovations {
        y.push(mp.mu + mp.beta * prev + mp.sigma_y * e[0]);
        let next = mp.gamma * prev + mp.sigma_x * e[1];
        x.push(next);
        prev = next;
    }
    Sample { y, x, x0: mp.x0 }
}
