//! The distance `d(θ) = r_u(θ) − r_s(θ)`, its minimizer and the ratios `D_{i,j}`.

use serde::{Deserialize, Serialize};

use crate::bundles::{BundlePair, SlopeEvaluator};
use crate::error::{LabError, Result};
use crate::frequency::{reduce, Frequency};

/// A continuously evaluable distance field over the rotation by `ω`.
pub trait DistanceField: Sync {
    fn distance(&self, theta: f64) -> Result<f64>;

    fn frequency(&self) -> &Frequency;

    fn shift(&self, theta: f64, k: i64) -> f64 {
        self.frequency().shift(theta, k)
    }
}

impl DistanceField for SlopeEvaluator {
    fn distance(&self, theta: f64) -> Result<f64> {
        self.difference(theta)
    }

    fn frequency(&self) -> &Frequency {
        self.family().frequency()
    }
}

/// Closure-backed field, mostly for synthetic checks.
pub struct FnField<F> {
    f: F,
    frequency: Frequency,
}

impl<F: Fn(f64) -> f64 + Sync> FnField<F> {
    pub fn new(frequency: Frequency, f: F) -> Self {
        Self { f, frequency }
    }
}

impl<F: Fn(f64) -> f64 + Sync> DistanceField for FnField<F> {
    fn distance(&self, theta: f64) -> Result<f64> {
        Ok((self.f)(reduce(theta)))
    }

    fn frequency(&self) -> &Frequency {
        &self.frequency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldWarning {
    /// Another grid-local minimum within a factor 1.05 of the global one.
    MultipleMinima { theta: f64, d: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceField {
    pub grid: Vec<f64>,
    pub d: Vec<f64>,
    pub theta_c: f64,
    pub d_min: f64,
    /// `√d_min`, the expected width of the dip.
    pub refinement_width: f64,
    pub grid_argmin: usize,
    pub probes: usize,
    pub warnings: Vec<FieldWarning>,
}

impl DifferenceField {
    pub fn has_multiple_minima(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, FieldWarning::MultipleMinima { .. }))
    }
}

const GOLDEN: f64 = 0.6180339887498949;
const REFINE_WIDTH: f64 = 1e-12;
const REFINE_PROBES: usize = 60;
const MINIMA_FACTOR: f64 = 1.05;

/// Golden-section search for the minimum of `field` on `[center − h, center + h]`.
/// Returns `(θ, d, probes)`; never worse than `(center, d_center)`.
pub fn refine_minimum<F: DistanceField + ?Sized>(
    field: &F,
    center: f64,
    d_center: f64,
    h: f64,
) -> Result<(f64, f64, usize)> {
    let (mut a, mut b) = (-h, h);
    let mut best = (0.0, d_center);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = field.distance(reduce(center + x1))?;
    let mut f2 = field.distance(reduce(center + x2))?;
    let mut probes = 2;
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < best.1 {
            best = (x, f);
        }
    }
    while b - a > REFINE_WIDTH && probes < REFINE_PROBES {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = field.distance(reduce(center + x1))?;
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = field.distance(reduce(center + x2))?;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
        probes += 1;
    }
    Ok((reduce(center + best.0), best.1, probes))
}

/// Builds the field from grid values, then refines the grid argmin on the
/// continuously evaluated distance.
pub fn difference_field_with<F: DistanceField + ?Sized>(
    grid: Vec<f64>,
    d: Vec<f64>,
    field: &F,
) -> Result<DifferenceField> {
    let n = d.len();
    if n < 3 || grid.len() != n {
        return Err(LabError::InvalidInput("difference field needs at least 3 grid points".into()));
    }
    if let Some(i) = d.iter().position(|&x| !(x > 0.0)) {
        return Err(LabError::Domain(format!("d(theta)={} is not positive at theta={}", d[i], grid[i])));
    }
    let imin = (0..n).min_by(|&i, &j| d[i].total_cmp(&d[j])).expect("non-empty");
    let dmin_grid = d[imin];
    let warnings = (0..n)
        .filter(|&i| i != imin)
        .filter(|&i| {
            let (l, r) = (d[(i + n - 1) % n], d[(i + 1) % n]);
            d[i] <= l && d[i] <= r && d[i] <= MINIMA_FACTOR * dmin_grid
        })
        .map(|i| FieldWarning::MultipleMinima { theta: grid[i], d: d[i] })
        .collect();
    let h = 1.0 / n as f64;
    let (theta_c, d_min, probes) = refine_minimum(field, grid[imin], dmin_grid, h)?;
    Ok(DifferenceField {
        grid,
        d,
        theta_c,
        d_min,
        refinement_width: d_min.sqrt(),
        grid_argmin: imin,
        probes,
        warnings,
    })
}

pub fn difference_field(bundles: &BundlePair) -> Result<DifferenceField> {
    let ev = bundles.evaluator();
    difference_field_with(bundles.grid().to_vec(), bundles.d(), &ev)
}

/// `D_{i,j}(θ) = d(θ + jω)/d(θ + iω)`.
pub fn growth_ratio<F: DistanceField + ?Sized>(field: &F, theta: f64, i: i64, j: i64) -> Result<f64> {
    if i > j {
        return Err(LabError::InvalidInput(format!("growth_ratio needs i <= j, got i={i}, j={j}")));
    }
    if i == j {
        return Ok(1.0);
    }
    let di = field.distance(field.shift(theta, i))?;
    let dj = field.distance(field.shift(theta, j))?;
    Ok(dj / di)
}
