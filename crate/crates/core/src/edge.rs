//! Uniform-hyperbolicity certificates and bisection for the edge parameter `t₀`.

use serde::{Deserialize, Serialize};

use crate::bundles::{calibrate_steps, BundleOptions, SlopeEvaluator};
use crate::cocycle::ParameterFamily;
use crate::difference::refine_minimum;
use crate::error::{LabError, Result};
use crate::frequency::circle_offset;
use crate::lyapunov::unstable_stretch;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub bundle: BundleOptions,
    /// Orbit samples on which the bundles are checked.
    pub samples: usize,
    /// Lowest local minima of `d` on the orbit that are refined between samples.
    pub refine_minima: usize,
    pub d_floor: f64,
    pub residual_tol: f64,
    pub theta0: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            bundle: BundleOptions::default(),
            samples: 512,
            refine_minima: 4,
            d_floor: 1e-12,
            residual_tol: 1e-8,
            theta0: 0.0,
        }
    }
}

/// Why a parameter was not certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UhFailure {
    NonConvergence { iterations: usize, residual: f64 },
    ConeViolation { theta: f64 },
    OrderingViolation { theta: f64 },
    DistanceBelowFloor { d_min: f64 },
    ResidualTooLarge { residual: f64 },
    NonPositiveExponent { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UHCertificate {
    pub t: f64,
    pub is_uh: bool,
    pub d_min: f64,
    pub cone_constant: f64,
    pub invariance_residual: f64,
    pub iterations: usize,
    /// Orbit average of `log|λ₁|`.
    pub exponent: f64,
    pub failure: Option<UhFailure>,
}

impl UHCertificate {
    fn failed(t: f64, iterations: usize, failure: UhFailure) -> Self {
        Self {
            t,
            is_uh: false,
            d_min: f64::NAN,
            cone_constant: f64::INFINITY,
            invariance_residual: f64::INFINITY,
            iterations,
            exponent: f64::NAN,
            failure: Some(failure),
        }
    }
}

/// Checks convergence, cone, ordering, separation and positive stretch of the
/// bundles sampled along one orbit of the rotation.
pub fn certify_uh(family: &ParameterFamily, opts: &CertifyOptions) -> UHCertificate {
    let t = family.t();
    let cal = match calibrate_steps(family, opts.theta0, opts.samples.max(1), &opts.bundle) {
        Ok(c) => c,
        Err(LabError::NonConvergence { iterations, residual, .. }) => {
            return UHCertificate::failed(t, iterations, UhFailure::NonConvergence { iterations, residual })
        }
        Err(_) => {
            return UHCertificate::failed(
                t,
                0,
                UhFailure::NonConvergence {
                    iterations: 0,
                    residual: f64::INFINITY,
                },
            )
        }
    };
    let orbit = &cal.orbit;
    let mut d_min = f64::INFINITY;
    let mut cone: f64 = 1.0;
    let mut log_sum = 0.0;
    for j in 0..orbit.theta.len() {
        let theta = orbit.theta[j];
        let (ru, rs) = match (orbit.r_u[j].finite(), orbit.r_s[j].finite()) {
            (Some(u), Some(s)) if u > 0.0 && s > 0.0 => (u, s),
            _ => return UHCertificate::failed(t, cal.steps, UhFailure::ConeViolation { theta }),
        };
        if ru <= rs {
            return UHCertificate::failed(t, cal.steps, UhFailure::OrderingViolation { theta });
        }
        d_min = d_min.min(ru - rs);
        cone = cone.max(ru).max(rs).max(1.0 / ru).max(1.0 / rs);
        log_sum += unstable_stretch(&family.matrix(theta), ru).abs().ln();
    }
    // A narrow dip can fall between orbit samples; refine the lowest local minima.
    let ev = SlopeEvaluator::new(family.clone(), cal.steps, &opts.bundle);
    for (center, d_center, h) in orbit_minima(&orbit.theta, &orbit.r_u, &orbit.r_s, opts.refine_minima) {
        match refine_minimum(&ev, center, d_center, h) {
            Ok((_, d, _)) => d_min = d_min.min(d),
            Err(e) => return UHCertificate::failed(t, cal.steps, failure_of(e, center)),
        }
    }
    let residual = orbit.max_spread();
    let exponent = log_sum / orbit.theta.len() as f64;
    let failure = if !(d_min > opts.d_floor) {
        Some(UhFailure::DistanceBelowFloor { d_min })
    } else if !(residual < opts.residual_tol) {
        Some(UhFailure::ResidualTooLarge { residual })
    } else if !(exponent > 0.0) {
        Some(UhFailure::NonPositiveExponent { exponent })
    } else {
        None
    };
    UHCertificate {
        t,
        is_uh: failure.is_none(),
        d_min,
        cone_constant: cone,
        invariance_residual: residual,
        iterations: cal.steps,
        exponent,
        failure,
    }
}

fn failure_of(e: LabError, theta: f64) -> UhFailure {
    match e {
        LabError::ConeViolation { theta, .. } => UhFailure::ConeViolation { theta },
        LabError::OrderingViolation { theta, .. } => UhFailure::OrderingViolation { theta },
        LabError::NonConvergence { iterations, residual, .. } => UhFailure::NonConvergence { iterations, residual },
        _ => UhFailure::ConeViolation { theta },
    }
}

/// `(θ, d, half-width)` for the `count` lowest local minima of `d = r_u − r_s`
/// over the orbit sorted around the circle; the half-width reaches the neighbours.
fn orbit_minima(
    theta: &[f64],
    r_u: &[crate::projective::Slope],
    r_s: &[crate::projective::Slope],
    count: usize,
) -> Vec<(f64, f64, f64)> {
    let n = theta.len();
    if n < 3 || count == 0 {
        return Vec::new();
    }
    let mut pts: Vec<(f64, f64)> = (0..n)
        .filter_map(|j| Some((theta[j], r_u[j].finite()? - r_s[j].finite()?)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = pts.len();
    let mut minima: Vec<(f64, f64, f64)> = (0..m)
        .filter_map(|i| {
            let (prev, next) = (pts[(i + m - 1) % m], pts[(i + 1) % m]);
            let (th, d) = pts[i];
            (d <= prev.1 && d <= next.1).then(|| {
                let h = circle_offset(th, prev.0).abs().max(circle_offset(next.0, th).abs());
                (th, d, h)
            })
        })
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    minima.truncate(count);
    minima
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEstimate {
    pub t0: f64,
    /// `(t_uh, t_non_uh)`.
    pub bracket: (f64, f64),
    pub width: f64,
    pub tol: f64,
    /// Every certificate computed, in evaluation order.
    pub certificates: Vec<UHCertificate>,
}

/// Bisection between a certified `t_lo` and a non-certified `t_hi`.
pub fn find_edge<B>(builder: B, t_lo: f64, t_hi: f64, tol: f64, opts: &CertifyOptions) -> Result<EdgeEstimate>
where
    B: Fn(f64) -> ParameterFamily,
{
    if !(tol > 0.0) {
        return Err(LabError::InvalidInput(format!("bisection tolerance must be positive, got {tol}")));
    }
    if !(t_lo < t_hi) {
        return Err(LabError::BadBracket {
            t_lo,
            t_hi,
            reason: "t_lo must be below t_hi".into(),
        });
    }
    let lo_cert = certify_uh(&builder(t_lo), opts);
    if !lo_cert.is_uh {
        return Err(LabError::BadBracket {
            t_lo,
            t_hi,
            reason: format!("lower end is not uniformly hyperbolic ({:?})", lo_cert.failure),
        });
    }
    let hi_cert = certify_uh(&builder(t_hi), opts);
    if hi_cert.is_uh {
        return Err(LabError::BadBracket {
            t_lo,
            t_hi,
            reason: "upper end is uniformly hyperbolic".into(),
        });
    }
    let mut certificates = vec![lo_cert, hi_cert];
    let (mut lo, mut hi) = (t_lo, t_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let c = certify_uh(&builder(mid), opts);
        if c.is_uh {
            lo = mid;
        } else {
            hi = mid;
        }
        certificates.push(c);
    }
    Ok(EdgeEstimate {
        t0: 0.5 * (lo + hi),
        bracket: (lo, hi),
        width: hi - lo,
        tol,
        certificates,
    })
}

/// A bracket for the bottom edge of a Schrödinger family parametrized by energy:
/// `min V − 3` lies below the spectrum and `mean V − 2 + margin` at or above its bottom.
pub fn schrodinger_bracket(potential: &Potential) -> (f64, f64) {
    let (lo, _) = potential.bounds();
    (lo - 3.0, potential.mean() - 2.0 + 1e-3)
}
