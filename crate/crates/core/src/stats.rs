//! Least-squares line fits and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for two points).
    pub slope_se: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub n: usize,
}

impl LineFit {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y ≈ a + b x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need at least two points, got {}", x.len().min(y.len()))));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = if x.len() > 2 { (ss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, slope_se, residual: (ss / n).sqrt(), n: x.len() })
}

/// Fit of `log y` against `log x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two lines fitted to `(x[..k], y[..k])` and `(x[k..], y[k..])` with the
/// split `k` minimizing the total squared residual; each side keeps at least
/// `min_points` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoRegimeFit {
    pub early: LineFit,
    pub late: LineFit,
    /// First index of the late regime.
    pub split: usize,
}

pub fn fit_two_regimes(x: &[f64], y: &[f64], min_points: usize) -> Result<TwoRegimeFit> {
    let n = x.len();
    let min_points = min_points.max(2);
    if n != y.len() || n < 2 * min_points {
        return Err(Error::Fit(format!("two-regime fit needs at least {} points, got {n}", 2 * min_points)));
    }
    let sse = |f: &LineFit| f.residual.powi(2) * f.n as f64;
    let mut best: Option<(f64, TwoRegimeFit)> = None;
    for k in min_points..=n - min_points {
        let (Ok(early), Ok(late)) = (fit_line(&x[..k], &y[..k]), fit_line(&x[k..], &y[k..])) else {
            continue;
        };
        let total = sse(&early) + sse(&late);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, TwoRegimeFit { early, late, split: k }));
        }
    }
    best.map(|(_, f)| f).ok_or_else(|| Error::Fit("no admissible split".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12 && f.residual < 1e-14);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn mean_and_error() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_regimes_find_the_kink() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v < 8.0 { 2.0 * v } else { 16.0 + 0.1 * (v - 8.0) }).collect();
        let f = fit_two_regimes(&x, &y, 3).unwrap();
        assert_eq!(f.split, 8);
        assert!((f.early.slope - 2.0).abs() < 1e-12 && (f.late.slope - 0.1).abs() < 1e-12);
    }
}
