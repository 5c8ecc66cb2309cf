//! Small numerical toolbox: quadrature on (0,1), monotone root finding,
//! empirical quantiles, sample moments and 2×2 / 3×3 linear algebra.

use crate::error::{Error, Result};

/// Tanh-sinh (double exponential) quadrature of `f` over `(a, b)`.
///
/// Handles integrable endpoint singularities such as `Φ⁻¹(u)` near 0 and 1.
/// Abscissae closer than `1e-300` to an endpoint are skipped.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let mut k: i64 = 0;
    loop {
        let t = k as f64 * h;
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let cosh_s = s.cosh();
        // 1 - tanh(s), computed without cancellation
        let comp = 1.0 / (s.exp() * cosh_s);
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        if comp * half < 1e-300 || w < 1e-300 {
            break;
        }
        let dist = half * comp;
        let xs: &[f64] = if k == 0 { &[0.0] } else { &[1.0, -1.0] };
        for &sign in xs {
            let x = if k == 0 {
                mid
            } else if sign > 0.0 {
                b - dist
            } else {
                a + dist
            };
            if x <= a || x >= b {
                continue;
            }
            let v = f(x);
            if v.is_finite() {
                sum += w * v;
            }
        }
        k += 1;
        if k > 2000 {
            break;
        }
    }
    sum * h * half
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]`.
///
/// Newton steps using `df` are taken when they stay inside the current
/// bracket, bisection otherwise. Stops when the bracket or step is below `tol`.
pub fn invert_increasing<F, D>(f: F, df: D, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol * (1.0 + x.abs()) || (hi - lo) <= tol * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Type-7 (linear interpolation) quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty slice");
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile of unsorted data.
pub fn quantile(data: &[f64], p: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Weighted generalisation of the type-7 quantile.
///
/// With sorted values `x_i` and cumulative weights `S_i`, the plotting
/// position of `x_i` is `(S_i - w_i) / (S_n - w_n)`; equal weights reduce to
/// type 7 exactly. `pairs` need not be sorted.
pub fn weighted_quantile(pairs: &mut [(f64, f64)], p: f64) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positions: Vec<(f64, f64)> = pairs.iter().map(|&(x, w)| (x, w)).filter(|&(_, w)| w > 0.0).collect();
    let n = positions.len();
    assert!(n > 0, "weighted quantile with no positive weights");
    if n == 1 {
        return positions[0].0;
    }
    let total: f64 = positions.iter().map(|q| q.1).sum();
    let denom = total - positions[n - 1].1;
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(x, w) in &positions {
        let pos = cum / denom;
        cum += w;
        if pos >= p {
            return match prev {
                None => x,
                Some((px, ppos)) if pos > ppos => px + (p - ppos) / (pos - ppos) * (x - px),
                Some(_) => x,
            };
        }
        prev = Some((x, pos));
    }
    positions[n - 1].0
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `n - 1`.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Moment-based skewness and excess kurtosis (divisor `n`).
pub fn skew_kurtosis(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// `ln Σ exp(v_i)` with the maximum factored out.
pub fn log_sum_exp(v: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.into_iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Symmetric 2×2 matrix stored as `[[a, b], [b, d]]` in row-major form.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat2_inv(m: &Mat2) -> Result<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-300 || !det.is_finite() {
        return Err(Error::Domain("singular 2x2 matrix".into()));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn mat2_vec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Lower Cholesky factor of a symmetric positive semidefinite 3×3 matrix.
///
/// Zero pivots (up to a relative tolerance) are allowed and produce a zero
/// column, so singular but valid covariance matrices are accepted. A clearly
/// negative pivot is reported as a domain error.
pub fn cholesky3_psd(a: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let scale = (0..3).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-10 * scale;
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d < -tol {
            return Err(Error::Domain(format!(
                "covariance matrix is not positive semidefinite (pivot {d:.3e})"
            )));
        }
        if d <= tol {
            // Zero pivot: the remaining entries of this column must vanish too.
            for i in (j + 1)..3 {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if s.abs() > 1e-8 * scale.sqrt() * scale.sqrt() {
                    return Err(Error::Domain(
                        "covariance matrix is not positive semidefinite".into(),
                    ));
                }
            }
            continue;
        }
        let ljj = d.sqrt();
        l[j][j] = ljj;
        for i in (j + 1)..3 {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / ljj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_polynomial_and_singular() {
        let v = tanh_sinh(|x| x * x, 0.0, 1.0);
        assert!((v - 1.0 / 3.0).abs() < 1e-13);
        let v = tanh_sinh(|x| x.ln(), 0.0, 1.0);
        assert!((v + 1.0).abs() < 1e-12);
        let v = tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 1.0);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn inversion_hits_target() {
        let x = invert_increasing(|x| x * x * x, |x| 3.0 * x * x, 8.0, 0.0, 10.0, 1e-14);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn type7_matches_r() {
        // R: quantile(c(1,2,3,4,10), c(.1,.5,.95), type = 7) = 1.4, 3.0, 8.8
        let d = [10.0, 1.0, 3.0, 2.0, 4.0];
        assert!((quantile(&d, 0.1) - 1.4).abs() < 1e-12);
        assert!((quantile(&d, 0.5) - 3.0).abs() < 1e-12);
        assert!((quantile(&d, 0.95) - 8.8).abs() < 1e-12);
    }

    #[test]
    fn weighted_quantile_reduces_to_type7() {
        let d = [10.0, 1.0, 3.0, 2.0, 4.0, -7.5, 0.25];
        for &p in &[0.0, 0.05, 0.3, 0.5, 0.77, 0.95, 1.0] {
            let mut pairs: Vec<(f64, f64)> = d.iter().map(|&x| (x, 0.2)).collect();
            let w = weighted_quantile(&mut pairs, p);
            assert!((w - quantile(&d, p)).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn cholesky_accepts_singular_psd() {
        // [[1, 0, 1], [0, 4/3, 2/3], [1, 2/3, 4/3]]: rank 2
        let a = [[1.0, 0.0, 1.0], [0.0, 4.0 / 3.0, 2.0 / 3.0], [1.0, 2.0 / 3.0, 4.0 / 3.0]];
        let l = cholesky3_psd(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((s - a[i][j]).abs() < 1e-12);
            }
        }
        let bad = [[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [2.0, 0.0, 1.0]];
        assert!(cholesky3_psd(&bad).is_err());
    }

    #[test]
    fn mat2_inverse_roundtrip() {
        let m = [[1.0, -0.5], [-0.5, 1.0]];
        let inv = mat2_inv(&m).unwrap();
        assert!((inv[0][0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((inv[0][1] - 2.0 / 3.0).abs() < 1e-15);
        let id = mat2_mul(&m, &inv);
        assert!((id[0][0] - 1.0).abs() < 1e-15 && id[0][1].abs() < 1e-15);
    }
}
