//! Adaptive Simpson quadrature of vector-valued 1-periodic integrands over `[0, 1)`.
//!
//! Each panel carries five equally spaced samples; the coarse three-point and
//! fine five-point Simpson sums give the local error `|fine − coarse|/15`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::frequency::reduce;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panels narrower than this are accepted as they are.
    pub min_width: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            min_width: 1e-9,
            max_panels: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
}

impl Panel {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    fn nodes(&self) -> [f64; 5] {
        let h = self.width() / 4.0;
        [self.a, self.a + h, self.a + 2.0 * h, self.a + 3.0 * h, self.b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    /// Accepted panels in increasing order.
    pub panels: Vec<Panel>,
    pub evaluations: usize,
    /// Panels accepted at the width floor without meeting the tolerance.
    pub unresolved: usize,
}

fn simpson_pair<const K: usize>(p: &Panel, v: &[[f64; K]; 5]) -> ([f64; K], [f64; K]) {
    let w = p.width();
    let mut fine = [0.0; K];
    let mut err = [0.0; K];
    for k in 0..K {
        let coarse = w / 6.0 * (v[0][k] + 4.0 * v[2][k] + v[4][k]);
        let f = w / 12.0 * (v[0][k] + 4.0 * v[1][k] + 2.0 * v[2][k] + 4.0 * v[3][k] + v[4][k]);
        fine[k] = f + (f - coarse) / 15.0;
        err[k] = (f - coarse).abs() / 15.0;
    }
    (fine, err)
}

/// Integrates `f` over one period.
///
/// The starting mesh has `n_cells / 4` panels over a uniform grid of `n_cells`
/// points; `grid_values`, when given, supplies `f` on that grid. `control[k]`
/// selects which components are error-controlled, and `refine` can force a split
/// regardless of the error test.
pub fn integrate_periodic<const K: usize, F, R>(
    n_cells: usize,
    grid_values: Option<&[[f64; K]]>,
    f: F,
    control: [bool; K],
    refine: R,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult<K>>
where
    F: Fn(f64) -> Result<[f64; K]>,
    R: Fn(&Panel, &[[f64; K]; 5]) -> bool,
{
    if n_cells < 4 || n_cells % 4 != 0 {
        return Err(LabError::InvalidInput(format!(
            "quadrature grid must be a positive multiple of 4, got {n_cells}"
        )));
    }
    if let Some(g) = grid_values {
        if g.len() != n_cells {
            return Err(LabError::InvalidInput("grid values do not match the grid size".into()));
        }
    }
    let mut evaluations = 0usize;
    let mut eval = |x: f64| -> Result<[f64; K]> {
        evaluations += 1;
        f(reduce(x))
    };

    let n_panels = n_cells / 4;
    let mut stack: Vec<(Panel, [[f64; K]; 5])> = Vec::with_capacity(n_panels);
    let mut start_total = [0.0; K];
    for i in 0..n_panels {
        let p = Panel {
            a: (4 * i) as f64 / n_cells as f64,
            b: (4 * i + 4) as f64 / n_cells as f64,
        };
        let mut v = [[0.0; K]; 5];
        for (j, x) in p.nodes().into_iter().enumerate() {
            v[j] = match grid_values {
                Some(g) => g[(4 * i + j) % n_cells],
                None => eval(x)?,
            };
        }
        let (fine, _) = simpson_pair(&p, &v);
        for k in 0..K {
            start_total[k] += fine[k];
        }
        stack.push((p, v));
    }
    stack.reverse();

    let tol: [f64; K] = std::array::from_fn(|k| (opts.rel_tol * start_total[k].abs()).max(opts.abs_tol));
    let mut accepted: Vec<(Panel, [f64; K], [f64; K])> = Vec::with_capacity(n_panels);
    let mut unresolved = 0usize;
    while let Some((p, v)) = stack.pop() {
        let (fine, err) = simpson_pair(&p, &v);
        let within = (0..K).all(|k| !control[k] || err[k] <= tol[k] * p.width());
        let forced = refine(&p, &v);
        if (within && !forced) || p.width() / 2.0 < opts.min_width {
            if !within {
                unresolved += 1;
            }
            accepted.push((p, fine, err));
            continue;
        }
        if accepted.len() + stack.len() + 2 > opts.max_panels {
            return Err(LabError::QuadratureNotConverged {
                error: (0..K).filter(|&k| control[k]).map(|k| err[k]).fold(0.0, f64::max),
                tolerance: (0..K).filter(|&k| control[k]).map(|k| tol[k]).fold(f64::INFINITY, f64::min),
            });
        }
        let mid = v[2];
        let left = Panel { a: p.a, b: (p.a + p.b) / 2.0 };
        let right = Panel { a: left.b, b: p.b };
        let lq = [eval(left.nodes()[1])?, eval(left.nodes()[3])?];
        let rq = [eval(right.nodes()[1])?, eval(right.nodes()[3])?];
        stack.push((right, [mid, rq[0], v[3], rq[1], v[4]]));
        stack.push((left, [v[0], lq[0], v[1], lq[1], mid]));
    }

    accepted.sort_by(|x, y| x.0.a.total_cmp(&y.0.a));
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for (_, fine, err) in &accepted {
        for k in 0..K {
            value[k] += fine[k];
            error[k] += err[k];
        }
    }
    for k in (0..K).filter(|&k| control[k]) {
        if error[k] > tol[k] {
            return Err(LabError::QuadratureNotConverged {
                error: error[k],
                tolerance: tol[k],
            });
        }
    }
    Ok(QuadratureResult {
        value,
        error,
        panels: accepted.into_iter().map(|(p, _, _)| p).collect(),
        evaluations,
        unresolved,
    })
}

/// Five-point Simpson on a fixed mesh; returns `(value, |fine − coarse|/15 summed)`.
pub fn integrate_on_panels<const K: usize, F>(panels: &[Panel], f: F) -> Result<([f64; K], [f64; K])>
where
    F: Fn(f64) -> Result<[f64; K]>,
{
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let mut carry: Option<(f64, [f64; K])> = None;
    for p in panels {
        let nodes = p.nodes();
        let first = match carry {
            Some((x, v)) if x == p.a => v,
            _ => f(reduce(p.a))?,
        };
        let mut v = [first; 5];
        for j in 1..5 {
            v[j] = f(reduce(nodes[j]))?;
        }
        carry = Some((p.b, v[4]));
        let (fine, err) = simpson_pair(p, &v);
        for k in 0..K {
            value[k] += fine[k];
            error[k] += err[k];
        }
    }
    Ok((value, error))
}
