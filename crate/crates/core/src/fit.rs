//! Log-log power-law fits and edge extrapolation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// `(x_min, x_max)` of the fitted data.
    pub range: (f64, f64),
    pub n_points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.exponent)
    }
}

/// Least-squares line through `(log x, log y)`: `y ≈ prefactor · x^exponent`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(LabError::InvalidInput("xs and ys differ in length".into()));
    }
    let n = xs.len();
    if n < 5 {
        return Err(LabError::DegenerateFit(format!("need at least 5 points, got {n}")));
    }
    if let Some(i) = (0..n).find(|&i| !(xs[i] > 0.0 && ys[i] > 0.0) || !xs[i].is_finite() || !ys[i].is_finite()) {
        return Err(LabError::DegenerateFit(format!(
            "non-positive or non-finite point ({}, {})",
            xs[i], ys[i]
        )));
    }
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        return Err(LabError::DegenerateFit(format!("x spans less than a decade: [{lo}, {hi}]")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        range: (lo, hi),
        n_points: n,
    })
}

/// Coefficients of `L(gap) ≈ l0 + b·√gap + c·gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeExtrapolation {
    pub l0: f64,
    pub b: f64,
    pub c: f64,
}

/// Least-squares fit of `L = l0 + b√gap + c·gap`; `l0` estimates the value at the edge.
pub fn extrapolate_edge_value(gaps: &[f64], ls: &[f64]) -> Result<EdgeExtrapolation> {
    let n = gaps.len();
    if n != ls.len() || n < 4 {
        return Err(LabError::DegenerateFit(format!("need at least 4 matching points, got {n}")));
    }
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => gaps[i].sqrt(),
        _ => gaps[i],
    });
    let y = DVector::from_column_slice(ls);
    let svd = a.svd(true, true);
    let x = svd
        .solve(&y, 1e-14)
        .map_err(|e| LabError::DegenerateFit(e.to_string()))?;
    Ok(EdgeExtrapolation {
        l0: x[0],
        b: x[1],
        c: x[2],
    })
}
