//! Numerical checks of the growth, quadratic-shape, interval and floor conditions
//! on a distance field near its collision point.

use serde::{Deserialize, Serialize};

use crate::difference::DistanceField;
use crate::error::Result;
use crate::frequency::{circle_offset, reduce};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionOptions {
    /// Sample points in `I` used for stopping times and growth rates.
    pub interval_samples: usize,
    /// Uniform samples for the outside-floor check.
    pub outside_samples: usize,
    /// Largest stopping time searched for.
    pub max_stopping_time: usize,
    /// Allowed relative deviation of `(d − d_min)/x²` from its fitted value inside `I`.
    pub quad_tolerance: f64,
    /// Required fraction of outside samples above the floor.
    pub outside_pass_fraction: f64,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        Self {
            interval_samples: 17,
            outside_samples: 2000,
            max_stopping_time: 10_000,
            quad_tolerance: 0.1,
            outside_pass_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    Growth,
    Quadratic,
    Interval,
    OutsideFloor,
    PartialSums,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionViolation {
    pub clause: Clause,
    pub theta: f64,
    pub k: Option<i64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

impl StoppingTimeStats {
    fn of(v: &[usize]) -> Self {
        if v.is_empty() {
            return Self { min: 0, max: 0, mean: f64::NAN };
        }
        Self {
            min: *v.iter().min().unwrap(),
            max: *v.iter().max().unwrap(),
            mean: v.iter().sum::<usize>() as f64 / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub theta_c: f64,
    pub d_min: f64,
    /// Largest `a` with `D_{0,j} ≥ e^{aj}` and `D_{−j,0} ≤ e^{−aj}` on every sample.
    pub growth_rate_a: f64,
    pub growth_ok: bool,
    /// Least-squares coefficient of `d − d_min ≈ q0·(θ − θ_c)²` near `θ_c`.
    pub quad_fit_coefficient: f64,
    /// `C₁` with `x²/C₁ ≤ d − d_min ≤ C₁ x²` on `I`.
    pub quad_constant_c1: f64,
    /// `max |q/q0 − 1|` over `I`.
    pub quad_fit_residual: f64,
    /// `I = [θ_c + lo, θ_c + hi]` as offsets.
    pub interval: (f64, f64),
    pub interval_length: f64,
    /// `|I| / (2√d_min)`.
    pub c2: f64,
    pub interval_ok: bool,
    pub outside_floor_fraction: f64,
    pub outside_samples_checked: usize,
    pub outside_floor_ok: bool,
    pub sigma_plus: StoppingTimeStats,
    pub sigma_minus: StoppingTimeStats,
    pub s_plus_max: f64,
    pub s_minus_max: f64,
    /// `1/(1 − e^{−a})`, infinite unless `a > 0`.
    pub s_bound: f64,
    pub s_bound_ok: bool,
    pub violations: Vec<AssumptionViolation>,
}

struct OrbitData {
    sigma: usize,
    /// `min_j log(D)/j` over `j = 1..=σ` with the orientation giving growth.
    rate: f64,
    partial_sum: f64,
}

/// Walks `θ + kω` (k = ±1, ±2, ...) until `d` exceeds `floor`.
fn walk<F: DistanceField + ?Sized>(
    field: &F,
    theta: f64,
    d0: f64,
    floor: f64,
    dir: i64,
    max: usize,
) -> Result<Option<OrbitData>> {
    let mut rate = f64::INFINITY;
    let mut partial = 1.0;
    for j in 1..=max {
        let dj = field.distance(field.shift(theta, dir * j as i64))?;
        let ratio = dj / d0;
        rate = rate.min(ratio.ln() / j as f64);
        if dj > floor {
            return Ok(Some(OrbitData {
                sigma: j,
                rate,
                partial_sum: partial,
            }));
        }
        partial += 1.0 / ratio;
    }
    Ok(None)
}

/// Checks the collision-point conditions on `field` around `(θ_c, d_min)`.
pub fn verify_assumptions<F: DistanceField + ?Sized>(
    field: &F,
    theta_c: f64,
    d_min: f64,
    opts: &AssumptionOptions,
) -> Result<AssumptionReport> {
    let mut violations = Vec::new();
    let root = d_min.sqrt();
    let q_at = |x: f64| -> Result<f64> { Ok((field.distance(reduce(theta_c + x))? - d_min) / (x * x)) };

    // Curvature from |x| ≤ √d_min/8; the dip can be narrower than √d_min away from the limit.
    let start = root.min(0.5) / 64.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 1..=8 {
        for s in [-1.0, 1.0] {
            let x = s * start * k as f64;
            let y = field.distance(reduce(theta_c + x))? - d_min;
            num += y * x * x;
            den += x.powi(4);
        }
    }
    let q0 = num / den;
    let mut q_lo = f64::INFINITY;
    let mut q_hi: f64 = 0.0;
    let mut interval = (0.0, 0.0);
    let mut dev: f64 = 0.0;
    if q0 > 0.0 && q0.is_finite() {
        for (side, slot) in [(-1.0f64, 0usize), (1.0, 1)] {
            let mut w = start;
            let mut accepted = 0.0;
            loop {
                let next = (w * 1.05).min(0.5);
                let probes = [w + (next - w) / 3.0, w + 2.0 * (next - w) / 3.0, next];
                let mut ok = true;
                let mut local = Vec::with_capacity(3);
                for p in probes {
                    let q = q_at(side * p)?;
                    if !((q / q0 - 1.0).abs() <= opts.quad_tolerance) {
                        ok = false;
                        break;
                    }
                    local.push(q);
                }
                if !ok {
                    break;
                }
                for q in local {
                    q_lo = q_lo.min(q);
                    q_hi = q_hi.max(q);
                    dev = dev.max((q / q0 - 1.0).abs());
                }
                accepted = next;
                if next >= 0.5 {
                    break;
                }
                w = next;
            }
            if slot == 0 {
                interval.0 = -accepted;
            } else {
                interval.1 = accepted;
            }
        }
    } else {
        violations.push(AssumptionViolation {
            clause: Clause::Quadratic,
            theta: theta_c,
            k: None,
            detail: format!("no positive quadratic coefficient near theta_c (fit {q0})"),
        });
    }
    let c1 = if q_lo.is_finite() { q_hi.max(1.0 / q_lo) } else { f64::INFINITY };
    let length = interval.1 - interval.0;
    let c2 = length / (2.0 * root);
    let interval_ok = interval.0 < -start && interval.1 > start;
    if !interval_ok {
        violations.push(AssumptionViolation {
            clause: Clause::Interval,
            theta: theta_c,
            k: None,
            detail: format!("quadratic window is empty or narrower than sqrt(d_min)/64: {interval:?}"),
        });
    }

    // Stopping times, growth rates and partial sums on samples of I.
    let m = opts.interval_samples.max(1);
    let (lo, hi) = if length > 0.0 { interval } else { (-root.min(0.5), root.min(0.5)) };
    let mut sig_p = Vec::new();
    let mut sig_m = Vec::new();
    let mut a = f64::INFINITY;
    let mut s_plus: f64 = 0.0;
    let mut s_minus: f64 = 0.0;
    for i in 0..m {
        let x = if m == 1 { 0.0 } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 };
        let theta = reduce(theta_c + x);
        let d0 = field.distance(theta)?;
        match walk(field, theta, d0, root, 1, opts.max_stopping_time)? {
            Some(o) => {
                sig_p.push(o.sigma);
                a = a.min(o.rate);
                s_plus = s_plus.max(o.partial_sum);
            }
            None => violations.push(AssumptionViolation {
                clause: Clause::Growth,
                theta,
                k: Some(opts.max_stopping_time as i64),
                detail: "forward orbit never leaves the critical region".into(),
            }),
        }
        match walk(field, theta, d0, root, -1, opts.max_stopping_time)? {
            Some(o) => {
                sig_m.push(o.sigma);
                a = a.min(o.rate);
                s_minus = s_minus.max(o.partial_sum);
            }
            None => violations.push(AssumptionViolation {
                clause: Clause::Growth,
                theta,
                k: Some(-(opts.max_stopping_time as i64)),
                detail: "backward orbit never leaves the critical region".into(),
            }),
        }
    }
    if !a.is_finite() {
        a = f64::NAN;
    }
    let growth_ok = a > 0.0 && violations.iter().all(|v| v.clause != Clause::Growth);
    if !(a > 0.0) {
        violations.push(AssumptionViolation {
            clause: Clause::Growth,
            theta: theta_c,
            k: None,
            detail: format!("no positive growth rate (best a = {a})"),
        });
    }
    let s_bound = if a > 0.0 { 1.0 / (1.0 - (-a).exp()) } else { f64::INFINITY };
    let s_bound_ok = a > 0.0 && s_plus <= s_bound + 1e-6 && s_minus <= s_bound + 1e-6;
    if a > 0.0 && !s_bound_ok {
        violations.push(AssumptionViolation {
            clause: Clause::PartialSums,
            theta: theta_c,
            k: None,
            detail: format!("S+ = {s_plus}, S- = {s_minus} exceed {s_bound}"),
        });
    }

    // Floor outside the orbit segments of I.
    let k_plus = sig_p.iter().copied().max().unwrap_or(1) as i64;
    let k_minus = sig_m.iter().copied().max().unwrap_or(1) as i64;
    let centers: Vec<f64> = (-(k_minus - 1)..k_plus).map(|k| field.shift(theta_c, k)).collect();
    let inside = |theta: f64| {
        centers.iter().any(|&c| {
            let off = circle_offset(theta, c);
            off >= lo && off <= hi
        })
    };
    let mut checked = 0usize;
    let mut passed = 0usize;
    let mut first_fail = None;
    for i in 0..opts.outside_samples {
        let theta = (i as f64 + 0.5) / opts.outside_samples as f64;
        if inside(theta) {
            continue;
        }
        checked += 1;
        if field.distance(theta)? >= root {
            passed += 1;
        } else if first_fail.is_none() {
            first_fail = Some(theta);
        }
    }
    let fraction = if checked == 0 { f64::NAN } else { passed as f64 / checked as f64 };
    let outside_floor_ok = fraction >= opts.outside_pass_fraction;
    if checked == 0 {
        violations.push(AssumptionViolation {
            clause: Clause::OutsideFloor,
            theta: theta_c,
            k: None,
            detail: format!("orbit segments of I up to ({}, {}) cover every sample", -(k_minus - 1), k_plus - 1),
        });
    } else if let Some(theta) = first_fail {
        if !outside_floor_ok {
            violations.push(AssumptionViolation {
                clause: Clause::OutsideFloor,
                theta,
                k: None,
                detail: format!("only {:.2}% of outside samples satisfy d >= sqrt(d_min)", 100.0 * fraction),
            });
        }
    }

    Ok(AssumptionReport {
        theta_c,
        d_min,
        growth_rate_a: a,
        growth_ok,
        quad_fit_coefficient: q0,
        quad_constant_c1: c1,
        quad_fit_residual: if q_lo.is_finite() { dev } else { f64::NAN },
        interval,
        interval_length: length,
        c2,
        interval_ok,
        outside_floor_fraction: fraction,
        outside_samples_checked: checked,
        outside_floor_ok,
        sigma_plus: StoppingTimeStats::of(&sig_p),
        sigma_minus: StoppingTimeStats::of(&sig_m),
        s_plus_max: s_plus,
        s_minus_max: s_minus,
        s_bound,
        s_bound_ok,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difference::FnField;
    use crate::frequency::Frequency;

    #[test]
    fn synthetic_quadratic() {
        let m = 1e-4;
        let field = FnField::new(Frequency::golden_mean(), move |x| m + circle_offset(x, 0.3).powi(2));
        let r = verify_assumptions(&field, 0.3, m, &AssumptionOptions::default()).unwrap();
        assert!((r.quad_fit_coefficient - 1.0).abs() < 1e-6);
        assert!((r.quad_constant_c1 - 1.0).abs() < 1e-6);
        assert!((r.interval.0 + 0.5).abs() < 1e-12 && (r.interval.1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_field_has_no_growth() {
        let field = FnField::new(Frequency::golden_mean(), |_| 5f64.sqrt());
        let r = verify_assumptions(&field, 0.1, 5f64.sqrt(), &AssumptionOptions::default()).unwrap();
        assert!(!r.growth_ok);
        assert!(!(r.growth_rate_a > 0.0));
        assert!(r.violations.iter().any(|v| v.clause == Clause::Growth));
    }
}
