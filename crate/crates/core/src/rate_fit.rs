//! Least-squares order fits `y ≈ c (log λ)^q / λ^p` and spread statistics.

use crate::error::{Error, Result};

/// A fitted rate `y = c (log λ)^q / λ^p` with `q ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub c: f64,
    pub p: f64,
    pub q: u32,
    /// Euclidean norm of the log-scale residuals.
    pub residual: f64,
    /// Residual of the rejected `q`.
    pub alternative_residual: f64,
}

impl RateFit {
    pub fn predict(&self, lambda: f64) -> f64 {
        self.c * lambda.ln().powi(self.q as i32) / lambda.powf(self.p)
    }
}

/// Fits `log y = log c + q log log λ - p log λ` for `q = 0` and `q = 1`
/// and returns the model with the smaller residual.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let mut lambdas: Vec<f64> = points.iter().map(|p| p.0).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.len() < 4 {
        return Err(Error::DegenerateGrid(format!(
            "need at least 4 distinct λ, got {}",
            lambdas.len()
        )));
    }
    if let Some(&(l, y)) = points.iter().find(|&&(l, y)| !(l > 1.0) || !(y > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate fits need λ > 1 and finite y > 0, got ({l}, {y})"
        )));
    }
    let fits: Vec<RateFit> = (0..2u32)
        .map(|q| {
            let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1.ln() - q as f64 * p.0.ln().ln()).collect();
            let (intercept, slope, residual) = least_squares(&xs, &ys);
            RateFit {
                c: intercept.exp(),
                p: -slope,
                q,
                residual,
                alternative_residual: f64::NAN,
            }
        })
        .collect();
    let (best, other) = if fits[1].residual < fits[0].residual { (1, 0) } else { (0, 1) };
    Ok(RateFit {
        alternative_residual: fits[other].residual,
        ..fits[best]
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        .sqrt();
    (intercept, slope, residual)
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Largest deviation from the median, relative to the median.
pub fn relative_spread(values: &[f64]) -> f64 {
    let med = median(values);
    values.iter().map(|v| (v - med).abs()).fold(0.0, f64::max) / med.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        vec![16.0, 32.0, 64.0, 128.0, 256.0]
    }

    #[test]
    fn log_over_lambda() {
        let pts: Vec<(f64, f64)> = grid().into_iter().map(|l| (l, l.ln() / l)).collect();
        let fit = fit_rate(&pts).unwrap();
        assert_eq!(fit.q, 1);
        assert!((fit.p - 1.0).abs() < 0.05);
        assert!((fit.c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_over_lambda() {
        let pts: Vec<(f64, f64)> = grid().into_iter().map(|l| (l, 3.0 / l)).collect();
        let fit = fit_rate(&pts).unwrap();
        assert_eq!(fit.q, 0);
        assert!((fit.p - 1.0).abs() < 1e-9);
        assert!((fit.predict(50.0) - 0.06).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let pts = [(2.0, 1.0), (3.0, 1.0), (3.0, 2.0), (4.0, 1.0)];
        assert!(matches!(fit_rate(&pts), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn spread_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((relative_spread(&[0.9, 1.0, 1.2]) - 0.2).abs() < 1e-15);
    }
}
