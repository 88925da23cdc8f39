//! Lines through the origin in slope coordinates and the Möbius action on them.

use serde::{Deserialize, Serialize};

use crate::matrix::Mat2;

/// The line spanned by `(r, 1)`, or by `(1, 0)` for [`Slope::Infinity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slope {
    Finite(f64),
    Infinity,
}

impl Slope {
    pub fn finite(self) -> Option<f64> {
        match self {
            Slope::Finite(r) if r.is_finite() => Some(r),
            _ => None,
        }
    }

    /// Distance used for convergence tests; relative once |r| exceeds 1.
    pub fn distance(self, other: Slope) -> f64 {
        match (self, other) {
            (Slope::Infinity, Slope::Infinity) => 0.0,
            (Slope::Finite(a), Slope::Finite(b)) => (a - b).abs() / a.abs().max(b.abs()).max(1.0),
            _ => f64::INFINITY,
        }
    }
}

impl From<f64> for Slope {
    fn from(r: f64) -> Self {
        if r.is_infinite() {
            Slope::Infinity
        } else {
            Slope::Finite(r)
        }
    }
}

/// `r ↦ (a11·r + a12)/(a21·r + a22)`; the image of `(1, 0)` is `(a11, a21)`.
#[inline]
pub fn mobius_apply(a: &Mat2, r: Slope) -> Slope {
    let (num, den) = match r {
        Slope::Finite(r) => (a.a11 * r + a.a12, a.a21 * r + a.a22),
        Slope::Infinity => (a.a11, a.a21),
    };
    if den == 0.0 {
        Slope::Infinity
    } else {
        Slope::Finite(num / den)
    }
}
