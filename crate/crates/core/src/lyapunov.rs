//! Lyapunov exponent by norm growth and by integrating the unstable stretch, and
//! its parameter derivative by the bundle integral and by central differences.

use serde::{Deserialize, Serialize};

use crate::bundles::{unstable_multi, BundlePair};
use crate::cocycle::ParameterFamily;
use crate::difference::DifferenceField;
use crate::error::{LabError, Result};
use crate::frequency::circle_offset;
use crate::matrix::{shear_exp, Mat2, Sl2Generator};
use crate::quadrature::{integrate_on_panels, integrate_periodic, Panel, QuadratureOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeMethod {
    NormGrowth,
    BundleIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    BundleFormula,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub method: LeMethod,
    /// Orbit length for norm growth, quadrature cells for the bundle integral.
    pub samples: usize,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub method: DerivativeMethod,
    pub quadrature_cells: usize,
    pub error_estimate: f64,
}

/// One JSON line per parameter: `{t, L, L_method, dLdt, dLdt_method, err_L, err_dLdt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRecord {
    pub t: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "L_method")]
    pub l_method: LeMethod,
    #[serde(rename = "dLdt")]
    pub dldt: f64,
    #[serde(rename = "dLdt_method")]
    pub dldt_method: DerivativeMethod,
    #[serde(rename = "err_L")]
    pub err_l: f64,
    #[serde(rename = "err_dLdt")]
    pub err_dldt: f64,
}

impl LyapunovRecord {
    pub fn new(t: f64, l: &LyapunovEstimate, d: &DerivativeEstimate) -> Self {
        Self {
            t,
            l: l.value,
            l_method: l.method,
            dldt: d.value,
            dldt_method: d.method,
            err_l: l.error_estimate,
            err_dldt: d.error_estimate,
        }
    }
}

const PHASES: usize = 8;

/// Birkhoff average of log-stretches of a renormalized vector, averaged over
/// eight starting phases `θ₀ + j/8`.
pub fn le_norm_growth(family: &ParameterFamily, n: usize, burn_in: usize, theta0: f64) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(LabError::InvalidInput("norm growth needs n >= 1".into()));
    }
    let omega = family.frequency();
    let values: Vec<f64> = (0..PHASES)
        .map(|j| {
            let start = theta0 + j as f64 / PHASES as f64;
            let mut v = [1.0, 0.0];
            let mut acc = 0.0;
            for k in 0..(burn_in + n) {
                v = family.matrix(omega.shift(start, k as i64)).apply(v);
                let s = v[0].hypot(v[1]);
                v = [v[0] / s, v[1] / s];
                if k >= burn_in {
                    acc += s.ln();
                }
            }
            acc / n as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / PHASES as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (PHASES - 1) as f64;
    let sem = (var / PHASES as f64).sqrt();
    // Birkhoff sums of the stretch differ from n·L by a bounded coboundary.
    let bias = if mean == 0.0 && sem == 0.0 { 0.0 } else { 1.0 / n as f64 };
    Ok(LyapunovEstimate {
        value: mean.max(0.0),
        method: LeMethod::NormGrowth,
        samples: n,
        error_estimate: sem + bias,
    })
}

/// `λ₁(θ)`: the second component of `A(θ)·(r_u, 1)ᵀ`.
#[inline]
pub fn unstable_stretch(m: &Mat2, r_u: f64) -> f64 {
    m.a21 * r_u + m.a22
}

/// Integrand components: log|λ₁|, the derivative density, d, and the two
/// slope-sensitivity weights used for error propagation.
fn integrand(m: &Mat2, r_u: f64, r_s: f64, w: &Sl2Generator, theta: f64) -> Result<[f64; 5]> {
    let lambda = unstable_stretch(m, r_u);
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(LabError::Domain(format!("unstable stretch vanishes at theta={theta}")));
    }
    let d = r_u - r_s;
    let q1 = (r_u + r_s) / d;
    let q2 = 1.0 / d;
    let q3 = -r_u * r_s / d;
    let dens = w.w1 * q1 + w.w2 * q2 + w.w3 * q3;
    let d2 = d * d;
    let sens = (w.w1.abs() * 2.0 * (r_u + r_s) + w.w2.abs() * 2.0 + w.w3.abs() * (r_u * r_u + r_s * r_s)) / d2;
    Ok([lambda.abs().ln(), dens, d, m.a21.abs() / lambda.abs(), sens])
}

/// Both bundle integrals from one adaptive pass, plus the mesh it settled on.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleIntegrals {
    pub lyapunov: LyapunovEstimate,
    pub derivative: DerivativeEstimate,
    pub mean_distance: f64,
    pub panels: Vec<Panel>,
    pub evaluations: usize,
}

/// Local refinement policy around the collision point.
fn refine_near(df: Option<&DifferenceField>) -> impl Fn(&Panel, &[[f64; 5]; 5]) -> bool + '_ {
    move |p, v| {
        let Some(df) = df else { return false };
        let w = df.refinement_width;
        let mid = 0.5 * (p.a + p.b);
        let off = circle_offset(mid, df.theta_c).abs();
        if off - 0.5 * p.width() < 2.0 * w && p.width() > w / 25.0 {
            return true;
        }
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[2]), hi.max(x[2])));
        lo < 100.0 * df.d_min && hi > 1.01 * lo && p.width() > 1e-7
    }
}

/// Integrates `log|λ₁|` and `Σ w_i q_i` over the circle with the bundles' evaluator,
/// seeding the mesh with the grid values of `bundles`.
pub fn bundle_integrals(
    bundles: &BundlePair,
    field: Option<&DifferenceField>,
    generator: &Sl2Generator,
    opts: &QuadratureOptions,
) -> Result<BundleIntegrals> {
    let family = bundles.family();
    let ev = bundles.evaluator();
    let n = bundles.len();
    let grid_values: Vec<[f64; 5]> = bundles
        .grid()
        .iter()
        .zip(bundles.r_u().iter().zip(bundles.r_s()))
        .map(|(&theta, (&ru, &rs))| integrand(&family.matrix(theta), ru, rs, generator, theta))
        .collect::<Result<_>>()?;
    let f = |theta: f64| -> Result<[f64; 5]> {
        let d_theta = ev.pair(theta)?;
        let (ru, rs) = d_theta.finite().ok_or(LabError::ConeViolation {
            theta,
            r_u: f64::INFINITY,
            r_s: f64::INFINITY,
        })?;
        integrand(&family.matrix(theta), ru, rs, generator, theta)
    };
    let q = if n % 4 == 0 {
        integrate_periodic(n, Some(&grid_values), f, [true, true, true, false, false], refine_near(field), opts)?
    } else {
        let cells = 4 * n.div_ceil(4);
        integrate_periodic(cells, None, f, [true, true, true, false, false], refine_near(field), opts)?
    };
    let tol = ev.tol();
    let cells = q.panels.len();
    Ok(BundleIntegrals {
        lyapunov: LyapunovEstimate {
            value: q.value[0],
            method: LeMethod::BundleIntegral,
            samples: cells,
            error_estimate: q.error[0] + tol * q.value[3],
        },
        derivative: DerivativeEstimate {
            value: q.value[1],
            method: DerivativeMethod::BundleFormula,
            quadrature_cells: cells,
            error_estimate: q.error[1] + tol * q.value[4],
        },
        mean_distance: q.value[2],
        panels: q.panels,
        evaluations: q.evaluations,
    })
}

/// `L = ∫ log|λ₁(θ)| dθ`.
pub fn le_from_bundle(
    bundles: &BundlePair,
    field: Option<&DifferenceField>,
    opts: &QuadratureOptions,
) -> Result<LyapunovEstimate> {
    Ok(bundle_integrals(bundles, field, &Sl2Generator::SHEAR, opts)?.lyapunov)
}

/// `dL/dt = −∫ r_u r_s/(r_u − r_s) dθ` for the standard shear.
pub fn derivative_bundle(
    bundles: &BundlePair,
    field: Option<&DifferenceField>,
    opts: &QuadratureOptions,
) -> Result<DerivativeEstimate> {
    Ok(bundle_integrals(bundles, field, &Sl2Generator::SHEAR, opts)?.derivative)
}

/// `Σ_i ∫ q_i w_i dθ` for a constant generator `w = [[w1, w2], [w3, −w1]]`, with
/// `q1 = (r_u + r_s)/d`, `q2 = 1/d`, `q3 = −r_u r_s/d`.
pub fn derivative_general(
    bundles: &BundlePair,
    field: Option<&DifferenceField>,
    generator: &Sl2Generator,
    opts: &QuadratureOptions,
) -> Result<DerivativeEstimate> {
    Ok(bundle_integrals(bundles, field, generator, opts)?.derivative)
}

/// Step used when none is given: `max(10⁻⁶, gap/100)`.
pub fn default_fd_step(t: f64, edge: Option<f64>) -> f64 {
    match edge {
        Some(e) if e > t => (1e-6f64).max((e - t) / 100.0),
        _ => 1e-5,
    }
}

/// `L` at `t + s` for each shift `s`, integrated on a fixed mesh. Points whose
/// slopes have not settled to `tol` after `steps` are redone with doubled length.
pub fn le_on_mesh_multi<const M: usize>(
    family: &ParameterFamily,
    shifts: [f64; M],
    steps: usize,
    panels: &[Panel],
    tol: f64,
    cap: usize,
) -> Result<[f64; M]> {
    let (v, _) = integrate_on_panels(panels, |theta| {
        let mut n = steps.max(1);
        let slopes = loop {
            let r = unstable_multi(family, theta, n, shifts);
            let worst = r.iter().map(|x| x.1).fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
            if worst <= tol {
                break r;
            }
            if n >= cap {
                return Err(LabError::NonConvergence {
                    theta,
                    iterations: n,
                    residual: worst,
                });
            }
            n = (2 * n).min(cap);
        };
        let m = family.base().evaluate(theta);
        let mut out = [0.0; M];
        for j in 0..M {
            let ru = slopes[j].0.finite().ok_or(LabError::ConeViolation {
                theta,
                r_u: f64::INFINITY,
                r_s: f64::NAN,
            })?;
            let lambda = unstable_stretch(&(m * shear_exp(family.t() + shifts[j])), ru);
            if lambda == 0.0 {
                return Err(LabError::Domain(format!("unstable stretch vanishes at theta={theta}")));
            }
            out[j] = lambda.abs().ln();
        }
        Ok(out)
    })?;
    Ok(v)
}

/// Adaptive mesh for `log|λ₁|` alone, seeded with the bundle grid.
pub fn stretch_mesh(bundles: &BundlePair, opts: &QuadratureOptions) -> Result<Vec<Panel>> {
    let family = bundles.family();
    let ev = bundles.evaluator();
    let n = bundles.len();
    let log_stretch = |theta: f64, ru: f64| -> Result<[f64; 1]> {
        let lambda = unstable_stretch(&family.matrix(theta), ru);
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(LabError::Domain(format!("unstable stretch vanishes at theta={theta}")));
        }
        Ok([lambda.abs().ln()])
    };
    let f = |theta: f64| -> Result<[f64; 1]> {
        let (r, _) = ev.unstable(theta)?;
        let ru = r.finite().ok_or(LabError::ConeViolation {
            theta,
            r_u: f64::INFINITY,
            r_s: f64::NAN,
        })?;
        log_stretch(theta, ru)
    };
    let q = if n % 4 == 0 {
        let grid: Vec<[f64; 1]> = bundles
            .grid()
            .iter()
            .zip(bundles.r_u())
            .map(|(&theta, &ru)| log_stretch(theta, ru))
            .collect::<Result<_>>()?;
        integrate_periodic(n, Some(&grid), f, [true], |_, _| false, opts)?
    } else {
        integrate_periodic(4 * n.div_ceil(4), None, f, [true], |_, _| false, opts)?
    };
    Ok(q.panels)
}

/// Central difference `(L(t+h) − L(t−h))/2h` with `L` integrated on a fixed mesh,
/// by default the adaptive mesh of `log|λ₁|` at `t`.
///
/// The error estimate compares against step `h/2`, so the stencil never leaves `[t−h, t+h]`.
pub fn derivative_fd(
    bundles: &BundlePair,
    h: f64,
    edge: Option<f64>,
    panels: Option<&[Panel]>,
    opts: &QuadratureOptions,
) -> Result<DerivativeEstimate> {
    let family = bundles.family();
    let t = family.t();
    if !(h > 0.0) || !h.is_finite() {
        return Err(LabError::InvalidInput(format!("finite-difference step must be positive, got {h}")));
    }
    if let Some(e) = edge {
        if t + h >= e {
            return Err(LabError::WindowViolation { t, h, edge: e });
        }
    }
    let own: Vec<Panel>;
    let mesh = match panels {
        Some(p) => p,
        None => {
            own = stretch_mesh(bundles, opts)?;
            &own
        }
    };
    // Half again the calibrated segment drives the slope error to rounding level.
    let steps = bundles.iterations_used() * 3 / 2;
    let ev = bundles.evaluator();
    let cap = 8 * steps.max(200_000);
    let [lp, lm, lp2, lm2] = le_on_mesh_multi(family, [h, -h, h / 2.0, -h / 2.0], steps, mesh, ev.tol() * 1e-2, cap)?;
    let d_h = (lp - lm) / (2.0 * h);
    let d_h2 = (lp2 - lm2) / h;
    let nodes = 4 * mesh.len() + 1;
    let rounding = 1e-15 * (nodes as f64).sqrt() * (1.0 + lp.abs()) / h;
    Ok(DerivativeEstimate {
        value: d_h,
        method: DerivativeMethod::FiniteDifference,
        quadrature_cells: mesh.len(),
        error_estimate: 4.0 / 3.0 * (d_h - d_h2).abs() + rounding,
    })
}
