//! Gaussian-kernel density estimate used as an estimated reference marginal.

use crate::error::{Error, Result};
use crate::numeric::{invert_increasing, quantile_sorted};
use crate::reference::{norm_cdf, norm_pdf};

#[derive(Debug, Clone)]
pub struct KdeMarginal {
    data: Vec<f64>,
    h: f64,
}

impl KdeMarginal {
    /// Silverman's rule-of-thumb bandwidth on at least 30 observations.
    pub fn fit(residuals: &[f64]) -> Result<Self> {
        let n = residuals.len();
        if n < 30 {
            return Err(Error::Estimation(format!(
                "kernel density estimate needs at least 30 observations, got {n}"
            )));
        }
        if residuals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Estimation("non-finite residual".into()));
        }
        let mut data = residuals.to_vec();
        data.sort_by(f64::total_cmp);
        let mean = data.iter().sum::<f64>() / n as f64;
        let sd = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let iqr = quantile_sorted(&data, 0.75) - quantile_sorted(&data, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let h = 0.9 * spread * (n as f64).powf(-0.2);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Estimation(
                "degenerate bandwidth: residuals have no spread".into(),
            ));
        }
        Ok(Self { data, h })
    }

    /// Standard deviation of the fitted mixture, `sqrt(sample variance + h²)`.
    pub fn sd(&self) -> f64 {
        let n = self.data.len() as f64;
        let mean = self.data.iter().sum::<f64>() / n;
        let var = self.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (var + self.h * self.h).sqrt()
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s: f64 = self.data.iter().map(|d| norm_pdf((x - d) / self.h)).sum();
        s / (self.data.len() as f64 * self.h)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s: f64 = self.data.iter().map(|d| norm_cdf((x - d) / self.h)).sum();
        s / self.data.len() as f64
    }

    /// Kernel weights relative to the nearest data point, so that the ratios
    /// below stay finite far in the tails.
    fn shifted_moments(&self, x: f64) -> (f64, f64, f64) {
        let zmin = self
            .data
            .iter()
            .map(|d| ((x - d) / self.h).abs())
            .fold(f64::INFINITY, f64::min);
        let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
        for d in &self.data {
            let z = (x - d) / self.h;
            let w = (-0.5 * (z * z - zmin * zmin)).exp();
            w0 += w;
            w1 += w * z;
            w2 += w * z * z;
        }
        (w0, w1, w2)
    }

    /// `-f̂'/f̂` at `x`.
    pub fn score_x(&self, x: f64) -> f64 {
        let (w0, w1, _) = self.shifted_moments(x);
        w1 / (w0 * self.h)
    }

    /// Derivative of the score at `x`.
    pub fn score_derivative_x(&self, x: f64) -> f64 {
        // f'/f = -E[z]/h, f''/f = (E[z²] - 1)/h², ψ' = -f''/f + (f'/f)².
        let (w0, w1, w2) = self.shifted_moments(x);
        let m1 = w1 / w0;
        let m2 = w2 / w0;
        (1.0 - m2 + m1 * m1) / (self.h * self.h)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let lo = self.data[0] - 40.0 * self.h;
        let hi = self.data[self.data.len() - 1] + 40.0 * self.h;
        invert_increasing(|x| self.cdf(x), |x| self.pdf(x), u, lo, hi, 1e-12)
    }
}
