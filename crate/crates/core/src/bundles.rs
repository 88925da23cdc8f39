//! Invariant unstable/stable slope fields by projective power iteration.
//!
//! The unstable slope at `θ` is the forward push of a seed from `θ − nω`, the
//! stable slope the backward pull from `θ + nω`. Convergence is judged either
//! by a Cauchy residual `|r(n) − r(2n)|` (single points) or by the spread of two
//! seeds pushed along the same orbit segment (grids), which bounds the distance
//! to the true slope for cone-contracting iterations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::ParameterFamily;
use crate::error::{LabError, Result};
use crate::projective::{mobius_apply, Slope};
use crate::stats::record_kernel_evaluations;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleOptions {
    /// Convergence tolerance on slopes.
    pub tol: f64,
    /// Largest orbit segment tried per point.
    pub iteration_cap: usize,
    /// First segment length tried.
    pub initial_steps: usize,
    /// Orbit samples used to calibrate the segment length.
    pub calibration_samples: usize,
    /// Extra cap doublings allowed when residuals still decay geometrically.
    pub retries: u32,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            iteration_cap: 200_000,
            initial_steps: 32,
            calibration_samples: 512,
            retries: 2,
        }
    }
}

/// A slope together with its convergence residual and the segment length used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionResult {
    pub slope: Slope,
    pub residual: f64,
    pub steps: usize,
}

fn push_forward(family: &ParameterFamily, theta: f64, n: usize, seed: Slope) -> Slope {
    let omega = family.frequency();
    let mut r = seed;
    for k in (1..=n as i64).rev() {
        r = mobius_apply(&family.matrix(omega.shift(theta, -k)), r);
    }
    r
}

fn pull_backward(family: &ParameterFamily, theta: f64, n: usize, seed: Slope) -> Slope {
    let omega = family.frequency();
    let mut r = seed;
    for k in (0..n as i64).rev() {
        r = mobius_apply(&family.matrix(omega.shift(theta, k)).adjugate(), r);
    }
    r
}

fn cauchy_iteration(
    family: &ParameterFamily,
    theta: f64,
    n: usize,
    seed: Slope,
    tol: f64,
    cap: usize,
    step: fn(&ParameterFamily, f64, usize, Slope) -> Slope,
) -> Result<DirectionResult> {
    if n == 0 {
        return Err(LabError::InvalidInput("segment length n must be at least 1".into()));
    }
    let mut n = n;
    let mut residual = f64::INFINITY;
    while n <= cap {
        let r1 = step(family, theta, n, seed);
        let r2 = step(family, theta, 2 * n, seed);
        // A periodic elliptic product can match at n and 2n but not also at 2n + 1.
        let r3 = step(family, theta, 2 * n + 1, seed);
        record_kernel_evaluations(1);
        residual = r1.distance(r2).max(r1.distance(r3));
        if residual <= tol {
            return Ok(DirectionResult {
                slope: r1,
                residual,
                steps: n,
            });
        }
        n *= 2;
    }
    Err(LabError::NonConvergence {
        theta,
        iterations: n / 2,
        residual,
    })
}

/// Forward push of `seed` from `θ − nω`, doubling `n` until the Cauchy residual
/// `max |r(n) − r(m)|` over `m ∈ {2n, 2n+1}` falls below `opts.tol`.
pub fn unstable_direction(
    family: &ParameterFamily,
    theta: f64,
    n: usize,
    seed: Slope,
    opts: &BundleOptions,
) -> Result<DirectionResult> {
    cauchy_iteration(family, theta, n, seed, opts.tol, opts.iteration_cap, push_forward)
}

/// Backward pull of `seed` from `θ + nω` under the inverse cocycle.
pub fn stable_direction(
    family: &ParameterFamily,
    theta: f64,
    n: usize,
    seed: Slope,
    opts: &BundleOptions,
) -> Result<DirectionResult> {
    cauchy_iteration(family, theta, n, seed, opts.tol, opts.iteration_cap, pull_backward)
}

/// Slopes at one point with their two-seed spreads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePair {
    pub r_u: Slope,
    pub r_s: Slope,
    pub spread_u: f64,
    pub spread_s: f64,
}

impl SlopePair {
    /// `(r_u, r_s)` when both are finite.
    pub fn finite(&self) -> Option<(f64, f64)> {
        Some((self.r_u.finite()?, self.r_s.finite()?))
    }

    pub fn spread(&self) -> f64 {
        self.spread_u.max(self.spread_s)
    }
}

fn unstable_pair(family: &ParameterFamily, theta: f64, n: usize) -> (Slope, f64) {
    let omega = family.frequency();
    let (mut a, mut b) = (Slope::Finite(1.0), Slope::Infinity);
    for k in (1..=n as i64).rev() {
        let m = family.matrix(omega.shift(theta, -k));
        a = mobius_apply(&m, a);
        b = mobius_apply(&m, b);
    }
    (a, a.distance(b))
}

fn stable_pair(family: &ParameterFamily, theta: f64, n: usize) -> (Slope, f64) {
    let omega = family.frequency();
    let (mut a, mut b) = (Slope::Finite(1.0), Slope::Finite(0.0));
    for k in (0..n as i64).rev() {
        let m = family.matrix(omega.shift(theta, k)).adjugate();
        a = mobius_apply(&m, a);
        b = mobius_apply(&m, b);
    }
    (a, a.distance(b))
}

/// Unstable slopes of the family at `t + s` for each shift `s`, from one pass over
/// the orbit: the base matrix is evaluated once per step.
pub fn unstable_multi<const M: usize>(
    family: &ParameterFamily,
    theta: f64,
    n: usize,
    shifts: [f64; M],
) -> [(Slope, f64); M] {
    let omega = family.frequency();
    let base = family.base();
    let shears = shifts.map(|s| crate::matrix::shear_exp(family.t() + s));
    let mut a = [Slope::Finite(1.0); M];
    let mut b = [Slope::Infinity; M];
    for k in (1..=n as i64).rev() {
        let m = base.evaluate(omega.shift(theta, -k));
        for j in 0..M {
            let mj = m * shears[j];
            a[j] = mobius_apply(&mj, a[j]);
            b[j] = mobius_apply(&mj, b[j]);
        }
    }
    record_kernel_evaluations(1);
    std::array::from_fn(|j| (a[j], a[j].distance(b[j])))
}

/// Evaluates both slopes at arbitrary points with a fixed starting segment length,
/// doubling locally when the two-seed spread exceeds the tolerance.
#[derive(Debug, Clone)]
pub struct SlopeEvaluator {
    family: ParameterFamily,
    steps: usize,
    tol: f64,
    cap: usize,
}

impl SlopeEvaluator {
    pub fn new(family: ParameterFamily, steps: usize, opts: &BundleOptions) -> Self {
        Self {
            family,
            steps: steps.max(1),
            tol: opts.tol,
            cap: opts.iteration_cap.max(steps),
        }
    }

    pub fn family(&self) -> &ParameterFamily {
        &self.family
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn converge(&self, theta: f64, f: fn(&ParameterFamily, f64, usize) -> (Slope, f64)) -> Result<(Slope, f64)> {
        let mut n = self.steps;
        loop {
            let (r, spread) = f(&self.family, theta, n);
            if spread <= self.tol {
                return Ok((r, spread));
            }
            if n >= self.cap {
                return Err(LabError::NonConvergence {
                    theta,
                    iterations: n,
                    residual: spread,
                });
            }
            n = (2 * n).min(self.cap);
        }
    }

    pub fn unstable(&self, theta: f64) -> Result<(Slope, f64)> {
        record_kernel_evaluations(1);
        self.converge(theta, unstable_pair)
    }

    pub fn stable(&self, theta: f64) -> Result<(Slope, f64)> {
        record_kernel_evaluations(1);
        self.converge(theta, stable_pair)
    }

    pub fn pair(&self, theta: f64) -> Result<SlopePair> {
        let (r_u, spread_u) = self.converge(theta, unstable_pair)?;
        let (r_s, spread_s) = self.converge(theta, stable_pair)?;
        record_kernel_evaluations(1);
        Ok(SlopePair {
            r_u,
            r_s,
            spread_u,
            spread_s,
        })
    }

    /// `d(θ) = r_u(θ) − r_s(θ)`, checked against the cone and the ordering.
    pub fn difference(&self, theta: f64) -> Result<f64> {
        let p = self.pair(theta)?;
        let (r_u, r_s) = check_cone(theta, &p)?;
        Ok(r_u - r_s)
    }
}

fn check_cone(theta: f64, p: &SlopePair) -> Result<(f64, f64)> {
    let (ru, rs) = match p.finite() {
        Some(v) => v,
        None => {
            return Err(LabError::ConeViolation {
                theta,
                r_u: p.r_u.finite().unwrap_or(f64::INFINITY),
                r_s: p.r_s.finite().unwrap_or(f64::INFINITY),
            })
        }
    };
    if !(ru > 0.0 && rs > 0.0) {
        return Err(LabError::ConeViolation { theta, r_u: ru, r_s: rs });
    }
    if !(ru > rs) {
        return Err(LabError::OrderingViolation { theta, r_u: ru, r_s: rs });
    }
    Ok((ru, rs))
}

/// Slopes sampled along one orbit `θ₀ + jω`, `j = 0..M`, computed in a single
/// forward and a single backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBundles {
    pub theta: Vec<f64>,
    pub r_u: Vec<Slope>,
    pub r_s: Vec<Slope>,
    pub spread_u: Vec<f64>,
    pub spread_s: Vec<f64>,
    pub steps: usize,
}

impl OrbitBundles {
    pub fn max_spread(&self) -> f64 {
        self.spread_u
            .iter()
            .chain(&self.spread_s)
            .fold(0.0, |acc: f64, &x| if x.is_nan() { f64::INFINITY } else { acc.max(x) })
    }
}

/// Every sample sees at least `n` steps of iteration; the cost is `O(M + n)`.
pub fn orbit_bundles(family: &ParameterFamily, theta0: f64, samples: usize, n: usize) -> OrbitBundles {
    let omega = family.frequency();
    let m = samples as i64;
    let n_i = n as i64;
    let theta: Vec<f64> = (0..m).map(|j| omega.shift(theta0, j)).collect();

    let mut r_u = Vec::with_capacity(samples);
    let mut spread_u = Vec::with_capacity(samples);
    let (mut a, mut b) = (Slope::Finite(1.0), Slope::Infinity);
    for k in -n_i..m {
        if k >= 0 {
            r_u.push(a);
            spread_u.push(a.distance(b));
        }
        let mat = family.matrix(omega.shift(theta0, k));
        a = mobius_apply(&mat, a);
        b = mobius_apply(&mat, b);
    }

    let mut r_s = vec![Slope::Infinity; samples];
    let mut spread_s = vec![f64::INFINITY; samples];
    let (mut a, mut b) = (Slope::Finite(1.0), Slope::Finite(0.0));
    for k in (0..m + n_i).rev() {
        let mat = family.matrix(omega.shift(theta0, k)).adjugate();
        a = mobius_apply(&mat, a);
        b = mobius_apply(&mat, b);
        if k < m {
            r_s[k as usize] = a;
            spread_s[k as usize] = a.distance(b);
        }
    }
    record_kernel_evaluations(samples as u64);
    OrbitBundles {
        theta,
        r_u,
        r_s,
        spread_u,
        spread_s,
        steps: n,
    }
}

/// Segment length found by doubling along an orbit, with the residual history.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub steps: usize,
    pub history: Vec<(usize, f64)>,
    pub orbit: OrbitBundles,
}

impl Calibration {
    /// Per-step geometric contraction rate estimated from the last two levels.
    pub fn decay_rate(&self) -> f64 {
        match self.history.as_slice() {
            [.., (n0, r0), (n1, r1)] if *r0 > 0.0 && r0.is_finite() => {
                if *r1 <= 0.0 {
                    0.0
                } else {
                    (r1 / r0).powf(1.0 / (n1 - n0) as f64)
                }
            }
            _ => f64::NAN,
        }
    }
}

/// Doubles the segment length until the orbit spreads fall below `opts.tol`.
/// The cap is doubled up to `opts.retries` times while the residual keeps
/// shrinking by a factor of at least four per doubling.
pub fn calibrate_steps(
    family: &ParameterFamily,
    theta0: f64,
    samples: usize,
    opts: &BundleOptions,
) -> Result<Calibration> {
    let mut n = opts.initial_steps.max(1);
    let mut cap = opts.iteration_cap.max(n);
    let mut retries = opts.retries;
    let mut history: Vec<(usize, f64)> = Vec::new();
    loop {
        let orbit = orbit_bundles(family, theta0, samples, n);
        let res = orbit.max_spread();
        history.push((n, res));
        if res <= opts.tol {
            if history.len() == 1 && n > 1 {
                let half = orbit_bundles(family, theta0, samples, n / 2).max_spread();
                history.insert(0, (n / 2, half));
            }
            return Ok(Calibration {
                steps: n,
                history,
                orbit,
            });
        }
        if 2 * n > cap {
            let shrinking = matches!(history.as_slice(), [.., (_, r0), (_, r1)] if r1.is_finite() && *r1 < 0.25 * r0);
            if retries > 0 && shrinking {
                retries -= 1;
                cap *= 2;
            } else {
                return Err(LabError::NonConvergence {
                    theta: theta0,
                    iterations: n,
                    residual: res,
                });
            }
        }
        n *= 2;
    }
}

/// Unstable/stable slope fields on a uniform grid of `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BundlePair {
    family: ParameterFamily,
    grid: Vec<f64>,
    r_u: Vec<f64>,
    r_s: Vec<f64>,
    residual_u: f64,
    residual_s: f64,
    iterations_used: usize,
    cone_constant: f64,
    decay_rate: f64,
    tol: f64,
    cap: usize,
}

impl BundlePair {
    /// Assembles a pair from precomputed slopes, validating cone and ordering.
    pub fn from_parts(
        family: ParameterFamily,
        grid: Vec<f64>,
        r_u: Vec<f64>,
        r_s: Vec<f64>,
        iterations_used: usize,
        opts: &BundleOptions,
    ) -> Result<Self> {
        if grid.len() != r_u.len() || grid.len() != r_s.len() || grid.len() < 2 {
            return Err(LabError::InvalidInput("grid and slope arrays must match, N >= 2".into()));
        }
        let mut cone: f64 = 1.0;
        for ((&theta, &ru), &rs) in grid.iter().zip(&r_u).zip(&r_s) {
            check_cone(
                theta,
                &SlopePair {
                    r_u: Slope::Finite(ru),
                    r_s: Slope::Finite(rs),
                    spread_u: 0.0,
                    spread_s: 0.0,
                },
            )?;
            cone = cone.max(ru).max(rs).max(1.0 / ru).max(1.0 / rs);
        }
        Ok(Self {
            family,
            grid,
            r_u,
            r_s,
            residual_u: 0.0,
            residual_s: 0.0,
            iterations_used,
            cone_constant: cone,
            decay_rate: f64::NAN,
            tol: opts.tol,
            cap: opts.iteration_cap,
        })
    }

    pub fn family(&self) -> &ParameterFamily {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn r_u(&self) -> &[f64] {
        &self.r_u
    }

    pub fn r_s(&self) -> &[f64] {
        &self.r_s
    }

    pub fn d(&self) -> Vec<f64> {
        self.r_u.iter().zip(&self.r_s).map(|(u, s)| u - s).collect()
    }

    pub fn residual_u(&self) -> f64 {
        self.residual_u
    }

    pub fn residual_s(&self) -> f64 {
        self.residual_s
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    pub fn cone_constant(&self) -> f64 {
        self.cone_constant
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// Off-grid evaluator sharing this pair's segment length and tolerance.
    pub fn evaluator(&self) -> SlopeEvaluator {
        SlopeEvaluator {
            family: self.family.clone(),
            steps: self.iterations_used.max(1),
            tol: self.tol,
            cap: self.cap.max(self.iterations_used),
        }
    }

    /// Sup over the grid of `|A(θ)·r_u(θ) − r_u(θ+ω)|` and the backward analogue for
    /// `r_s`, with the shifted slopes computed by direct iteration.
    pub fn invariance_residual(&self) -> Result<(f64, f64)> {
        let ev = self.evaluator();
        let omega = self.family.frequency();
        let rows: Vec<(f64, f64)> = self
            .grid
            .par_iter()
            .enumerate()
            .map(|(i, &theta)| {
                let next = ev.pair(omega.shift(theta, 1))?;
                let m = self.family.matrix(theta);
                let pushed = mobius_apply(&m, Slope::Finite(self.r_u[i]));
                let pulled = mobius_apply(&m.adjugate(), next.r_s);
                Ok((
                    pushed.distance(next.r_u),
                    pulled.distance(Slope::Finite(self.r_s[i])),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(rows
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), &(u, s)| (a.max(u), b.max(s))))
    }
}

/// Fills an `N`-point uniform grid with both slope fields.
///
/// The segment length is calibrated along one orbit, then applied to every grid
/// point and doubled globally until every two-seed spread is within tolerance.
pub fn compute_bundles(family: &ParameterFamily, n_grid: usize, opts: &BundleOptions) -> Result<BundlePair> {
    if n_grid < 2 {
        return Err(LabError::InvalidInput(format!("grid size must be at least 2, got {n_grid}")));
    }
    let cal = calibrate_steps(family, 0.0, opts.calibration_samples.min(n_grid).max(1), opts)?;
    let grid: Vec<f64> = (0..n_grid).map(|i| i as f64 / n_grid as f64).collect();
    let mut n = cal.steps;
    let cap = opts.iteration_cap.max(n) << opts.retries;
    loop {
        let pairs: Vec<(Slope, f64, Slope, f64)> = grid
            .par_iter()
            .map(|&theta| {
                let (ru, su) = unstable_pair(family, theta, n);
                let (rs, ss) = stable_pair(family, theta, n);
                (ru, su, rs, ss)
            })
            .collect();
        record_kernel_evaluations(n_grid as u64);
        let worst = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (i, if p.1.is_nan() || p.3.is_nan() { f64::INFINITY } else { p.1.max(p.3) }))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is non-empty");
        if worst.1 <= opts.tol {
            let mut r_u = Vec::with_capacity(n_grid);
            let mut r_s = Vec::with_capacity(n_grid);
            let (mut res_u, mut res_s) = (0.0f64, 0.0f64);
            for (&theta, &(ru, su, rs, ss)) in grid.iter().zip(&pairs) {
                let (u, s) = check_cone(
                    theta,
                    &SlopePair {
                        r_u: ru,
                        r_s: rs,
                        spread_u: su,
                        spread_s: ss,
                    },
                )?;
                r_u.push(u);
                r_s.push(s);
                res_u = res_u.max(su);
                res_s = res_s.max(ss);
            }
            let mut pair = BundlePair::from_parts(family.clone(), grid, r_u, r_s, n, opts)?;
            pair.residual_u = res_u;
            pair.residual_s = res_s;
            pair.decay_rate = cal.decay_rate();
            return Ok(pair);
        }
        if 2 * n > cap {
            return Err(LabError::NonConvergence {
                theta: grid[worst.0],
                iterations: n,
                residual: worst.1,
            });
        }
        n *= 2;
    }
}
