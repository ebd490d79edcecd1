//! Weighted least-squares line fits and model comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = intercept + slope x` fitted with weights `1/sigma^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Weighted coefficient of determination; 1 when the data are flat and fitted exactly.
    pub r2: f64,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub points: usize,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Akaike information criterion of the Gaussian model with two parameters.
    pub fn aic(&self) -> f64 {
        let n = self.points as f64;
        n * (self.rss.max(1e-300) / n).ln() + 4.0
    }
}

/// Smallest standard deviation used when forming weights.
pub const MIN_SIGMA: f64 = 1e-3;

/// Weighted least squares. `sigma` may be empty for an unweighted fit.
pub fn wls(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || (!sigma.is_empty() && sigma.len() != n) {
        return Err(Error::InvalidInput("a line fit needs at least two matching points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in fit data".into()));
    }
    let w: Vec<f64> =
        if sigma.is_empty() { vec![1.0; n] } else { sigma.iter().map(|s| 1.0 / s.max(MIN_SIGMA).powi(2)).collect() };
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = w.iter().zip(y).map(|(w, y)| w * (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    let slope_stderr = if sigma.is_empty() {
        if n > 2 {
            (rss / (n - 2) as f64 / sxx).sqrt()
        } else {
            0.0
        }
    } else {
        (1.0 / sxx).sqrt()
    };
    Ok(LineFit { slope, intercept, slope_stderr, r2, rss, points: n })
}
