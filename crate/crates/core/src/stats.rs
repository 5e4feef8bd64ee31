//! Small regression helpers for scaling fits.

use serde::{Deserialize, Serialize};

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit of `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    /// `exp(intercept)`: the constant in `y ~ c x^slope`.
    pub constant: f64,
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> PowerFit {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let (slope, b) = linear_fit(&pts);
    PowerFit {
        slope,
        constant: b.exp(),
    }
}
