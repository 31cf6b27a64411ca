//! Least-squares helpers: weighted polynomial fits and log-log power laws.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Polynomial coefficients (ascending powers) with the weighted RMS residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

/// Minimizes `sum_i w_i (y_i - sum_k c_k x_i^k)^2`. Weights must be
/// nonnegative with a positive sum.
pub fn weighted_polyfit(x: &[f64], y: &[f64], w: &[f64], degree: usize) -> Result<PolyFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Fit(format!(
            "length mismatch: {} x, {} y, {} weights",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    if x.len() <= degree {
        return Err(Error::Fit(format!(
            "degree {degree} needs more than {} points",
            x.len()
        )));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Fit("weights must be nonnegative with positive sum".into()));
    }
    // centre and scale the abscissa for conditioning, then map back
    let mean = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let scale = x
        .iter()
        .map(|a| (a - mean).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let rows = x.len();
    let design = DMatrix::from_fn(rows, degree + 1, |i, k| {
        w[i].sqrt() * ((x[i] - mean) / scale).powi(k as i32)
    });
    let rhs = DVector::from_fn(rows, |i, _| w[i].sqrt() * y[i]);
    let solved = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let residual = ((&design * &solved - &rhs).norm_squared() / total).sqrt();

    // expand sum_k b_k ((x - m)/s)^k into powers of x
    let mut coefficients = vec![0.0; degree + 1];
    for (k, b) in solved.iter().enumerate() {
        let bk = b / scale.powi(k as i32);
        let mut binom = 1.0;
        for (j, c) in coefficients.iter_mut().enumerate().take(k + 1) {
            // C(k, j) x^j (-m)^(k-j)
            *c += bk * binom * (-mean).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(PolyFit {
        coefficients,
        residual,
    })
}

/// Ordinary least squares of `ln y` against `ln x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Two-sided 95% Student-t interval for the slope.
    pub ci95: (f64, f64),
    pub points: usize,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if x.len() < 3 {
        return Err(Error::Fit(format!(
            "a power-law fit with a slope error needs at least 3 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = n - 2.0;
    let slope_se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(PowerLawFit {
        slope,
        intercept,
        slope_se,
        ci95: (slope - t * slope_se, slope + t * slope_se),
        points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyfit_recovers_cubic() {
        let x: Vec<f64> = (0..40).map(|i| 3.0 + 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - 2.0 * t + 0.5 * t * t - 0.25 * t * t * t).collect();
        let w: Vec<f64> = x.iter().map(|t| (-(t - 5.0) * (t - 5.0)).exp()).collect();
        let fit = weighted_polyfit(&x, &y, &w, 3).unwrap();
        for (c, e) in fit.coefficients.iter().zip([1.0, -2.0, 0.5, -0.25]) {
            assert!((c - e).abs() < 1e-8, "{:?}", fit.coefficients);
        }
        assert!(fit.residual < 1e-10);
        assert!(weighted_polyfit(&x[..3], &y[..3], &w[..3], 3).is_err());
    }

    #[test]
    fn power_law_exact_and_noisy() {
        let x = [4.0, 8.0, 16.0, 32.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        let fit = fit_power_law(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-12);
        let y = [1.0, 2.2, 3.9, 8.3];
        let fit = fit_power_law(&x, &y).unwrap();
        assert!(fit.ci95.0 < fit.slope && fit.slope < fit.ci95.1);
        // t_{0.975, 2} = 4.302653
        assert!(((fit.ci95.1 - fit.slope) / fit.slope_se - 4.302653).abs() < 1e-5);
        assert!(fit_power_law(&x[..2], &y[..2]).is_err());
    }
}
