//! 2×2 real matrices, the shear `e^{tw}` and constant `sl(2,ℝ)` generators.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Inverse via the adjugate; for SL(2,ℝ) this is exact up to the division by `det`.
    #[inline]
    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.a22 / det,
            -self.a12 / det,
            -self.a21 / det,
            self.a11 / det,
        ))
    }

    /// Adjugate, which is the inverse for determinant-one matrices.
    #[inline]
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22)
            .sqrt()
    }

    /// Euclidean operator norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        let f2 = self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22;
        let det = self.det();
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0);
        ((f2 + disc.sqrt()) / 2.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    #[inline]
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * r.a11 + self.a12 * r.a21,
            self.a11 * r.a12 + self.a12 * r.a22,
            self.a21 * r.a11 + self.a22 * r.a21,
            self.a21 * r.a12 + self.a22 * r.a22,
        )
    }
}

/// `e^{tw}` for the nilpotent shear `w = [[0, 0], [1, 0]]`, i.e. `I + t·w`.
#[inline]
pub fn shear_exp(t: f64) -> Mat2 {
    Mat2::new(1.0, 0.0, t, 1.0)
}

/// A constant element `[[w1, w2], [w3, −w1]]` of `sl(2,ℝ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sl2Generator {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Sl2Generator {
    /// The lower-left shear generating the parameter family.
    pub const SHEAR: Sl2Generator = Sl2Generator {
        w1: 0.0,
        w2: 0.0,
        w3: 1.0,
    };

    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.w1, self.w2, self.w3, -self.w1)
    }

    pub fn is_standard_shear(&self) -> bool {
        *self == Self::SHEAR
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_examples() {
        assert_eq!(shear_exp(0.0), Mat2::IDENTITY);
        assert_eq!(shear_exp(1.0), Mat2::new(1.0, 0.0, 1.0, 1.0));
        let m = shear_exp(-0.5);
        assert_eq!(m, Mat2::new(1.0, 0.0, -0.5, 1.0));
        assert_eq!(m.det(), 1.0);
    }

    #[test]
    fn shear_generator_is_nilpotent() {
        let w = Sl2Generator::SHEAR.matrix();
        assert_eq!(w * w, Mat2::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(shear_exp(0.3) * shear_exp(0.2), shear_exp(0.5));
    }

    #[test]
    fn products_and_inverses() {
        let a = Mat2::new(3.0, -1.0, 1.0, 0.0);
        assert_eq!(a * a, Mat2::new(8.0, -3.0, 3.0, -1.0));
        assert_eq!(a * a.inverse().unwrap(), Mat2::IDENTITY);
        assert_eq!(a.adjugate(), a.inverse().unwrap());
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn operator_norm_matches_closed_forms() {
        assert!((Mat2::new(2.0, 0.0, 0.0, 0.5).operator_norm() - 2.0).abs() < 1e-15);
        // [[3,-1],[1,0]] is not symmetric; σ_max² is the top eigenvalue of AᵀA = [[10,-3],[-3,1]].
        let top = (11.0 + (81.0f64 + 36.0).sqrt()) / 2.0;
        assert!((Mat2::new(3.0, -1.0, 1.0, 0.0).operator_norm() - top.sqrt()).abs() < 1e-14);
    }
}
