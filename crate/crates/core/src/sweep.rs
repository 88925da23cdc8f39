//! Parameter sweeps toward the edge and the checks run on their records.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundles::{compute_bundles, BundleOptions};
use crate::cocycle::ParameterFamily;
use crate::difference::difference_field;
use crate::error::{LabError, Result};
use crate::fit::{extrapolate_edge_value, fit_power_law, EdgeExtrapolation, PowerLawFit};
use crate::lyapunov::{bundle_integrals, default_fd_step, derivative_fd};
use crate::matrix::Sl2Generator;
use crate::quadrature::QuadratureOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub grid: usize,
    pub bundle: BundleOptions,
    pub quadrature: QuadratureOptions,
    /// Finite-difference step; `max(10⁻⁶, gap/100)` when absent.
    pub fd_step: Option<f64>,
    pub finite_difference: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            grid: 4096,
            bundle: BundleOptions::default(),
            quadrature: QuadratureOptions::default(),
            fd_step: None,
            finite_difference: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub t: f64,
    pub gap: f64,
    pub d_min: f64,
    pub theta_c: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "dLdt_lemma")]
    pub dldt_bundle: f64,
    #[serde(rename = "dLdt_fd")]
    pub dldt_fd: f64,
    #[serde(rename = "err_L")]
    pub err_l: f64,
    #[serde(rename = "err_dLdt")]
    pub err_dldt: f64,
    #[serde(rename = "err_fd")]
    pub err_fd: f64,
    pub iterations: usize,
    pub multiple_minima: bool,
    /// `ok`, or a failure reason.
    pub status: String,
}

impl SweepRecord {
    fn failed(t: f64, gap: f64, reason: &LabError) -> Self {
        Self {
            t,
            gap,
            d_min: f64::NAN,
            theta_c: f64::NAN,
            l: f64::NAN,
            dldt_bundle: f64::NAN,
            dldt_fd: f64::NAN,
            err_l: f64::NAN,
            err_dldt: f64::NAN,
            err_fd: f64::NAN,
            iterations: 0,
            multiple_minima: false,
            status: format!("failed: {reason}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// `gap_k = g0 · ratio^{−k}`, `k = 0..count`.
pub fn geometric_gaps(g0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| g0 / ratio.powi(k as i32)).collect()
}

/// All quantities at one parameter.
pub fn sweep_point<B>(builder: &B, t0: f64, gap: f64, opts: &SweepOptions) -> SweepRecord
where
    B: Fn(f64) -> ParameterFamily + ?Sized,
{
    let t = t0 - gap;
    let run = || -> Result<SweepRecord> {
        let family = builder(t);
        let bundles = compute_bundles(&family, opts.grid, &opts.bundle)?;
        let field = difference_field(&bundles)?;
        let q = bundle_integrals(&bundles, Some(&field), &Sl2Generator::SHEAR, &opts.quadrature)?;
        let mut status = "ok".to_string();
        let (dldt_fd, err_fd) = if opts.finite_difference {
            let h = opts.fd_step.unwrap_or_else(|| default_fd_step(t, Some(t0)));
            match derivative_fd(&bundles, h, Some(t0), None, &opts.quadrature) {
                Ok(d) => (d.value, d.error_estimate),
                Err(e) => {
                    status = format!("fd failed: {e}");
                    (f64::NAN, f64::NAN)
                }
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(SweepRecord {
            t,
            gap,
            d_min: field.d_min,
            theta_c: field.theta_c,
            l: q.lyapunov.value,
            dldt_bundle: q.derivative.value,
            dldt_fd,
            err_l: q.lyapunov.error_estimate,
            err_dldt: q.derivative.error_estimate,
            err_fd,
            iterations: bundles.iterations_used(),
            multiple_minima: field.has_multiple_minima(),
            status,
        })
    };
    run().unwrap_or_else(|e| SweepRecord::failed(t, gap, &e))
}

/// One record per gap at `t = t0 − gap`, computed in parallel; failures are kept
/// as records with a reason in `status`.
pub fn run_sweep<B>(builder: &B, t0: f64, gaps: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRecord>>
where
    B: Fn(f64) -> ParameterFamily + Sync + ?Sized,
{
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0)) {
        return Err(LabError::InvalidInput(format!("gaps must be positive, got {g}")));
    }
    if gaps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidInput("gaps must be strictly decreasing".into()));
    }
    Ok(gaps.par_iter().map(|&g| sweep_point(builder, t0, g, opts)).collect())
}

fn valid(records: &[SweepRecord]) -> Vec<&SweepRecord> {
    records.iter().filter(|r| r.d_min.is_finite() && r.l.is_finite()).collect()
}

/// Power law of `d_min` against the gap.
pub fn distance_fit(records: &[SweepRecord]) -> Result<PowerLawFit> {
    let v = valid(records);
    let xs: Vec<f64> = v.iter().map(|r| r.gap).collect();
    let ys: Vec<f64> = v.iter().map(|r| r.d_min).collect();
    fit_power_law(&xs, &ys)
}

/// `L(t₀)` from the records by the `l0 + b√gap + c·gap` model.
pub fn edge_value(records: &[SweepRecord]) -> Result<EdgeExtrapolation> {
    let v = valid(records);
    let xs: Vec<f64> = v.iter().map(|r| r.gap).collect();
    let ys: Vec<f64> = v.iter().map(|r| r.l).collect();
    extrapolate_edge_value(&xs, &ys)
}

/// Power law of `|L(t) − L(t₀)|` against the gap.
pub fn holder_check(records: &[SweepRecord], l_edge: f64) -> Result<PowerLawFit> {
    let v = valid(records);
    let xs: Vec<f64> = v.iter().map(|r| r.gap).collect();
    let ys: Vec<f64> = v.iter().map(|r| (r.l - l_edge).abs()).collect();
    fit_power_law(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub k1: f64,
    pub k2: f64,
    pub ratio: f64,
    pub n_points: usize,
}

/// `c_k = |dL/dt|·√gap_k`; returns `(min, max, max/min)`.
pub fn derivative_bound_check(records: &[SweepRecord]) -> Result<DerivativeBounds> {
    let c: Vec<f64> = records
        .iter()
        .filter(|r| r.dldt_bundle.is_finite())
        .map(|r| r.dldt_bundle.abs() * r.gap.sqrt())
        .collect();
    if c.len() < 5 {
        return Err(LabError::DegenerateFit(format!("need at least 5 valid records, got {}", c.len())));
    }
    let k1 = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let k2 = c.iter().cloned().fold(0.0, f64::max);
    Ok(DerivativeBounds {
        k1,
        k2,
        ratio: k2 / k1,
        n_points: c.len(),
    })
}

/// Relative mismatch between `L(t_{k+1}) − L(t_k)` and the trapezoid of the two
/// endpoint derivatives, for consecutive valid records.
pub fn derivative_integral_consistency(records: &[SweepRecord]) -> Vec<f64> {
    let mut v: Vec<&SweepRecord> = valid(records)
        .into_iter()
        .filter(|r| r.dldt_bundle.is_finite())
        .collect();
    v.sort_by(|a, b| a.t.total_cmp(&b.t));
    v.windows(2)
        .map(|w| {
            let dl = w[1].l - w[0].l;
            let trap = 0.5 * (w[1].t - w[0].t) * (w[0].dldt_bundle + w[1].dldt_bundle);
            (dl - trap).abs() / dl.abs()
        })
        .collect()
}

/// Fits and bounds derived from a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub t0: f64,
    pub n_records: usize,
    pub n_failed: usize,
    pub edge_value: Option<EdgeExtrapolation>,
    pub l_edge_used: Option<f64>,
    pub distance_fit: Option<PowerLawFit>,
    pub holder_fit: Option<PowerLawFit>,
    pub bounds: Option<DerivativeBounds>,
    pub max_consistency_error: Option<f64>,
    pub notes: Vec<String>,
}

/// Runs every check that the records support; `l_edge` overrides extrapolation.
pub fn summarize(t0: f64, records: &[SweepRecord], l_edge: Option<f64>) -> SweepSummary {
    fn keep<T>(notes: &mut Vec<String>, r: Result<T>, what: &str) -> Option<T> {
        r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
    }
    let mut notes = Vec::new();
    let edge = keep(&mut notes, edge_value(records), "edge extrapolation");
    let l_edge_used = l_edge.or(edge.map(|e| e.l0));
    let distance = keep(&mut notes, distance_fit(records), "distance fit");
    let holder = match l_edge_used {
        Some(l0) => keep(&mut notes, holder_check(records, l0), "holder fit"),
        None => None,
    };
    let bounds = keep(&mut notes, derivative_bound_check(records), "derivative bounds");
    let consistency = derivative_integral_consistency(records);
    SweepSummary {
        t0,
        n_records: records.len(),
        n_failed: records.iter().filter(|r| !r.is_ok()).count(),
        edge_value: edge,
        l_edge_used,
        distance_fit: distance,
        holder_fit: holder,
        bounds,
        max_consistency_error: consistency.iter().cloned().reduce(f64::max),
        notes,
    }
}
