//! Reference marginal densities, their score and quantile functions, the
//! bivariate reference score `ℓ_g` and the pseudo-information `J_p`.

mod kde;

pub use kde::KdeMarginal;

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};
use crate::numeric::{invert_increasing, mat2_inv, mat2_mul, mat2_transpose, tanh_sinh, Mat2};

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn norm_inv(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * u)
}

fn ln_t_const(nu: f64) -> f64 {
    statrs::function::gamma::ln_gamma(0.5 * (nu + 1.0))
        - statrs::function::gamma::ln_gamma(0.5 * nu)
        - 0.5 * (nu * std::f64::consts::PI).ln()
}

/// Unit-scale Student-t density.
pub fn student_t_pdf(nu: f64, x: f64) -> f64 {
    (ln_t_const(nu) - 0.5 * (nu + 1.0) * (1.0 + x * x / nu).ln()).exp()
}

/// Unit-scale Student-t CDF, accurate in both tails.
pub fn student_t_cdf(nu: f64, x: f64) -> f64 {
    if nu == 3.0 && x.abs() <= 1.0 {
        let s = x / 3f64.sqrt();
        return 0.5 + (s.atan() + s / (1.0 + s * s)) / std::f64::consts::PI;
    }
    let tail = 0.5 * statrs::function::beta::beta_reg(0.5 * nu, 0.5, nu / (nu + x * x));
    if x <= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Unit-scale Student-t quantile, polished by Newton steps to ~1e-12.
pub fn student_t_quantile(nu: f64, u: f64) -> f64 {
    if u == 0.5 {
        return 0.0;
    }
    // Work in the lower tail for accuracy and reflect.
    let (p, sign) = if u > 0.5 { (1.0 - u, 1.0) } else { (u, -1.0) };
    let mut lo = -1.0;
    while student_t_cdf(nu, lo) > p && lo > -1e300 {
        lo *= 2.0;
    }
    let x = invert_increasing(|x| student_t_cdf(nu, x), |x| student_t_pdf(nu, x), p, lo, 0.0, 1e-14);
    sign * x.abs()
}

/// A reference marginal density `g`.
#[derive(Debug, Clone)]
pub enum Marginal {
    Gaussian,
    /// Unit-scale Student-t.
    StudentT { nu: f64 },
    Kde(Arc<KdeMarginal>),
}

/// Config-facing reference choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Gaussian,
    T3,
    Kde,
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ReferenceKind::Gaussian),
            "t3" => Ok(ReferenceKind::T3),
            "kde" => Ok(ReferenceKind::Kde),
            other => Err(Error::Config(format!(
                "unknown reference `{other}` (expected gaussian, t3 or kde)"
            ))),
        }
    }
}

impl Marginal {
    pub fn from_kind(kind: ReferenceKind) -> Option<Self> {
        match kind {
            ReferenceKind::Gaussian => Some(Marginal::Gaussian),
            ReferenceKind::T3 => Some(Marginal::StudentT { nu: 3.0 }),
            ReferenceKind::Kde => None,
        }
    }

    /// `-g'/g` at `x`.
    pub fn score_x(&self, x: f64) -> f64 {
        match self {
            Marginal::Gaussian => x,
            Marginal::StudentT { nu } => (nu + 1.0) * x / (nu + x * x),
            Marginal::Kde(k) => k.score_x(x),
        }
    }

    pub fn score_derivative_x(&self, x: f64) -> f64 {
        match self {
            Marginal::Gaussian => 1.0,
            Marginal::StudentT { nu } => (nu + 1.0) * (nu - x * x) / (nu + x * x).powi(2),
            Marginal::Kde(k) => k.score_derivative_x(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Gaussian => norm_pdf(x),
            Marginal::StudentT { nu } => student_t_pdf(*nu, x),
            Marginal::Kde(k) => k.pdf(x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Marginal::Gaussian => norm_inv(u),
            Marginal::StudentT { nu } => student_t_quantile(*nu, u),
            Marginal::Kde(k) => k.quantile(u),
        }
    }

    /// Standard deviation of `g`; infinite for Student-t with `ν ≤ 2`.
    pub fn sd(&self) -> f64 {
        match self {
            Marginal::Gaussian => 1.0,
            Marginal::StudentT { nu } if *nu > 2.0 => (nu / (nu - 2.0)).sqrt(),
            Marginal::StudentT { .. } => f64::INFINITY,
            Marginal::Kde(k) => k.sd(),
        }
    }

    /// Score composed with the quantile function, `u ↦ ψ(G⁻¹(u))`.
    pub fn score(&self, u: f64) -> f64 {
        self.score_x(self.quantile(u))
    }

    /// Fisher information `∫ ψ(G⁻¹(u))² du`.
    pub fn info(&self) -> f64 {
        match self {
            Marginal::Gaussian => 1.0,
            Marginal::StudentT { nu } => (nu + 1.0) / (nu + 3.0),
            Marginal::Kde(_) => tanh_sinh(|u| self.score(u).powi(2), 0.0, 1.0),
        }
    }
}

/// Marginal score `ψ(G⁻¹(u))` with domain checking.
pub fn marginal_score(family: &Marginal, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("probability {u} outside (0, 1)")));
    }
    Ok(family.score(u))
}

/// Fits a Gaussian-kernel reference marginal to residuals.
pub fn estimate_reference_kde(residuals: &[f64]) -> Result<Marginal> {
    Ok(Marginal::Kde(Arc::new(KdeMarginal::fit(residuals)?)))
}

type ScoreCache = RwLock<Option<(usize, Arc<[Vec<f64>; 2]>)>>;

/// Marginal reference densities plus reference correlation `ρ_g`.
#[derive(Debug)]
pub struct ReferenceScore {
    pub y: Marginal,
    pub x: Marginal,
    pub rho_g: f64,
    /// Multipliers applied to the marginal scores.
    scale: [f64; 2],
    info: [f64; 2],
    cache: ScoreCache,
}

impl Clone for ReferenceScore {
    fn clone(&self) -> Self {
        Self {
            y: self.y.clone(),
            x: self.x.clone(),
            rho_g: self.rho_g,
            scale: self.scale,
            info: self.info,
            cache: RwLock::new(self.cache.read().map(|c| c.clone()).unwrap_or(None)),
        }
    }
}

impl ReferenceScore {
    pub fn new(y: Marginal, x: Marginal, rho_g: f64) -> Result<Self> {
        Self::with_scale(y, x, rho_g, [1.0, 1.0])
    }

    /// Scores of the unit-variance versions of `y` and `x`: the density
    /// `s g(s z)` has score `s ψ(s z)`, so at a rank the score is multiplied
    /// by `s = sd(g)` and the information by `s²`. These are the scores whose
    /// drift and covariance agree when the reference matches the innovation
    /// law, which the limit experiment of the test assumes.
    pub fn standardized(y: Marginal, x: Marginal, rho_g: f64) -> Result<Self> {
        let scale = [y.sd(), x.sd()];
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Domain("reference marginals need finite variance to be standardized".into()));
        }
        Self::with_scale(y, x, rho_g, scale)
    }

    fn with_scale(y: Marginal, x: Marginal, rho_g: f64, scale: [f64; 2]) -> Result<Self> {
        check_rho(rho_g)?;
        let info = [y.info() * scale[0] * scale[0], x.info() * scale[1] * scale[1]];
        for v in info {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Estimation(format!("reference Fisher information {v} is not positive and finite")));
            }
        }
        Ok(Self {
            y,
            x,
            rho_g,
            scale,
            info,
            cache: RwLock::new(None),
        })
    }

    pub fn gaussian(rho_g: f64) -> Result<Self> {
        Self::new(Marginal::Gaussian, Marginal::Gaussian, rho_g)
    }

    /// Same marginals with a different reference correlation (cached score
    /// tables are kept).
    pub fn with_rho(&self, rho_g: f64) -> Result<Self> {
        check_rho(rho_g)?;
        let mut out = self.clone();
        out.rho_g = rho_g;
        Ok(out)
    }

    pub fn info_y(&self) -> f64 {
        self.info[0]
    }

    pub fn info_x(&self) -> f64 {
        self.info[1]
    }

    pub fn score_y(&self, u: f64) -> f64 {
        self.scale[0] * self.y.score(u)
    }

    pub fn score_x(&self, u: f64) -> f64 {
        self.scale[1] * self.x.score(u)
    }

    pub fn scale(&self) -> [f64; 2] {
        self.scale
    }

    /// Marginal scores at `r/(T+1)`, `r = 1..T`, indexed by `r - 1`.
    pub fn rank_scores(&self, t: usize) -> Arc<[Vec<f64>; 2]> {
        if let Ok(guard) = self.cache.read() {
            if let Some((n, tab)) = guard.as_ref() {
                if *n == t {
                    return tab.clone();
                }
            }
        }
        let grid = |m: &Marginal, s: f64| -> Vec<f64> {
            (1..=t).map(|r| s * m.score(r as f64 / (t as f64 + 1.0))).collect()
        };
        let tab = Arc::new([grid(&self.y, self.scale[0]), grid(&self.x, self.scale[1])]);
        if let Ok(mut guard) = self.cache.write() {
            *guard = Some((t, tab.clone()));
        }
        tab
    }
}

fn check_rho(rho_g: f64) -> Result<()> {
    if !(rho_g.abs() < 1.0) {
        return Err(Error::Domain(format!("reference correlation {rho_g} must lie in (-1, 1)")));
    }
    Ok(())
}

/// `ℓ_g` from marginal scores: `((s_y - ρ s_x), (s_x - ρ s_y)) / (1 - ρ²)`.
pub fn combine_scores(s_y: f64, s_x: f64, rho_g: f64) -> (f64, f64) {
    let d = 1.0 - rho_g * rho_g;
    ((s_y - rho_g * s_x) / d, (s_x - rho_g * s_y) / d)
}

pub fn bivariate_score(r: &ReferenceScore, u_y: f64, u_x: f64) -> Result<(f64, f64)> {
    check_rho(r.rho_g)?;
    let s_y = r.scale[0] * marginal_score(&r.y, u_y)?;
    let s_x = r.scale[1] * marginal_score(&r.x, u_x)?;
    Ok(combine_scores(s_y, s_x, r.rho_g))
}

/// Symmetric positive definite pseudo-information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoInfo {
    pub j: Mat2,
}

impl PseudoInfo {
    pub fn identity() -> Self {
        Self { j: [[1.0, 0.0], [0.0, 1.0]] }
    }

    /// `(b, c) J (b, c)'`.
    pub fn quad(&self, b: f64, c: f64) -> f64 {
        self.j[0][0] * b * b + 2.0 * self.j[0][1] * b * c + self.j[1][1] * c * c
    }
}

/// `J_p = (L⁻¹)' diag(J_y, J_x) L⁻¹` with `L` the lower Cholesky factor of
/// `R_g = [[1, ρ], [ρ, 1]]`.
pub fn pseudo_info_from(info_y: f64, info_x: f64, rho_g: f64) -> Result<PseudoInfo> {
    check_rho(rho_g)?;
    let l: Mat2 = [[1.0, 0.0], [rho_g, (1.0 - rho_g * rho_g).sqrt()]];
    let li = mat2_inv(&l)?;
    let d: Mat2 = [[info_y, 0.0], [0.0, info_x]];
    let mut j = mat2_mul(&mat2_transpose(&li), &mat2_mul(&d, &li));
    let off = 0.5 * (j[0][1] + j[1][0]);
    j[0][1] = off;
    j[1][0] = off;
    Ok(PseudoInfo { j })
}

pub fn pseudo_info(r: &ReferenceScore) -> PseudoInfo {
    pseudo_info_from(r.info_y(), r.info_x(), r.rho_g).expect("rho_g validated at construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_helpers() {
        assert_eq!(norm_inv(0.5), 0.0);
        assert!((norm_inv(0.975) - 1.959963984540054).abs() < 1e-14);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-14);
        for &u in &[1e-12, 1e-5, 0.3, 0.9999] {
            assert!((norm_cdf(norm_inv(u)) / u - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_quantile_accuracy() {
        // t_3 0.975 quantile = 3.182446305284263
        assert!((student_t_quantile(3.0, 0.975) - 3.182446305284263).abs() < 1e-10);
        for &u in &[1e-9, 0.01, 0.4, 0.5, 0.8, 1.0 - 1e-9] {
            let x = student_t_quantile(3.0, u);
            assert!((student_t_cdf(3.0, x) - u).abs() < 1e-13, "u={u}");
            let x = student_t_quantile(5.0, u);
            assert!((student_t_cdf(5.0, x) - u).abs() < 1e-12, "nu=5 u={u}");
        }
    }

    #[test]
    fn gaussian_score_examples() {
        assert_eq!(marginal_score(&Marginal::Gaussian, 0.5).unwrap(), 0.0);
        let u = 0.8413447460685429;
        assert!((marginal_score(&Marginal::Gaussian, u).unwrap() - norm_inv(u)).abs() < 1e-15);
        assert!(marginal_score(&Marginal::Gaussian, 0.0).is_err());
        assert!(marginal_score(&Marginal::Gaussian, 1.2).is_err());
    }

    #[test]
    fn t3_score_at_one() {
        let t3 = Marginal::StudentT { nu: 3.0 };
        assert!((t3.score_x(1.0) - 1.0).abs() < 1e-15);
        let u = student_t_cdf(3.0, 1.0);
        assert!((t3.score(u) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scores_center_and_information() {
        for m in [Marginal::Gaussian, Marginal::StudentT { nu: 3.0 }, Marginal::StudentT { nu: 7.5 }] {
            let m0 = tanh_sinh(|u| m.score(u), 0.0, 1.0);
            assert!(m0.abs() < 1e-6, "{m:?} mean {m0}");
            let i = tanh_sinh(|u| m.score(u).powi(2), 0.0, 1.0);
            assert!((i - m.info()).abs() < 1e-4, "{m:?} info {i}");
        }
    }

    #[test]
    fn bivariate_examples() {
        assert_eq!(combine_scores(1.3, -0.2, 0.0), (1.3, -0.2));
        let (a, b) = combine_scores(1.0, 0.0, -0.5);
        assert!((a - 4.0 / 3.0).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(combine_scores(0.0, 0.0, 0.7), (0.0, 0.0));
        assert!(ReferenceScore::gaussian(1.0).is_err());
        let r = ReferenceScore::gaussian(0.3).unwrap();
        assert!(bivariate_score(&r, 0.5, 1.0).is_err());
    }

    #[test]
    fn pseudo_info_examples() {
        let j = pseudo_info(&ReferenceScore::gaussian(0.0).unwrap()).j;
        assert_eq!(j, [[1.0, 0.0], [0.0, 1.0]]);
        let j = pseudo_info(&ReferenceScore::gaussian(-0.5).unwrap()).j;
        let want = [[4.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 4.0 / 3.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[i][k] - want[i][k]).abs() < 1e-12);
            }
        }
        let t3 = ReferenceScore::new(Marginal::StudentT { nu: 3.0 }, Marginal::StudentT { nu: 3.0 }, 0.0).unwrap();
        let j = pseudo_info(&t3).j;
        assert!((j[0][0] - 2.0 / 3.0).abs() < 1e-15 && j[0][1] == 0.0);
    }

    #[test]
    fn standardized_t3_has_unit_variance_information() {
        let t3 = Marginal::StudentT { nu: 3.0 };
        let r = ReferenceScore::standardized(t3.clone(), t3.clone(), -0.5).unwrap();
        assert!((r.info_y() - 2.0).abs() < 1e-14);
        assert!((r.score_y(0.8) - 3f64.sqrt() * t3.score(0.8)).abs() < 1e-14);
        let (ly, _) = bivariate_score(&r, 0.8, 0.5).unwrap();
        assert!((ly - r.score_y(0.8) / 0.75).abs() < 1e-14);
        let g = ReferenceScore::standardized(Marginal::Gaussian, Marginal::Gaussian, 0.3).unwrap();
        assert_eq!(pseudo_info(&g), pseudo_info(&ReferenceScore::gaussian(0.3).unwrap()));
        assert!(ReferenceScore::standardized(Marginal::StudentT { nu: 2.0 }, Marginal::Gaussian, 0.0).is_err());
    }

    #[test]
    fn rank_score_table_matches_direct() {
        let r = ReferenceScore::new(Marginal::StudentT { nu: 3.0 }, Marginal::Gaussian, 0.2).unwrap();
        let tab = r.rank_scores(9);
        assert_eq!(tab[0].len(), 9);
        assert_eq!(tab[0][3], r.score_y(0.4));
        assert_eq!(tab[1][8], r.score_x(0.9));
        let again = r.rank_scores(9);
        assert!(Arc::ptr_eq(&tab, &again));
    }
}
