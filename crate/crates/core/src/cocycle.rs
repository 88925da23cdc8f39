//! Quasi-periodic cocycles `(θ, v) ↦ (θ + ω, A(θ)v)` and the shear family
//! `A_t(θ) = A(θ)·e^{tw}`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::frequency::Frequency;
use crate::matrix::{shear_exp, Mat2, Sl2Generator};
use crate::potential::{Potential, TrigPolynomial};

/// Tolerance on `|det A(θ) − 1|` for transfer matrices built here.
pub const SL2_TOLERANCE: f64 = 1e-12;

const DET_CHECK_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CocycleKind {
    /// Rows `(V(θ) − E, −1), (1, 0)`.
    Schrodinger { potential: Potential, energy: f64 },
    Constant { matrix: Mat2 },
    /// Entries `[a11, a12, a21, a22]` as trigonometric polynomials.
    Trig { entries: Box<[TrigPolynomial; 4]> },
}

/// A 1-periodic map `θ ↦ A(θ) ∈ SL(2,ℝ)` over the rotation by `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleMap {
    frequency: Frequency,
    kind: CocycleKind,
}

/// The Schrödinger cocycle with rows `(V(θ) − E, −1), (1, 0)`.
pub fn schrodinger_cocycle(potential: Potential, energy: f64, frequency: Frequency) -> CocycleMap {
    CocycleMap {
        frequency,
        kind: CocycleKind::Schrodinger { potential, energy },
    }
}

impl CocycleMap {
    pub fn constant(matrix: Mat2, frequency: Frequency) -> Result<Self> {
        if !matrix.is_finite() || (matrix.det() - 1.0).abs() > SL2_TOLERANCE {
            return Err(LabError::InvalidInput(format!(
                "constant matrix has determinant {} (needs 1)",
                matrix.det()
            )));
        }
        Ok(Self {
            frequency,
            kind: CocycleKind::Constant { matrix },
        })
    }

    pub fn trig(entries: [TrigPolynomial; 4], frequency: Frequency) -> Result<Self> {
        let map = Self {
            frequency,
            kind: CocycleKind::Trig {
                entries: Box::new(entries),
            },
        };
        for i in 0..DET_CHECK_SAMPLES {
            let theta = i as f64 / DET_CHECK_SAMPLES as f64;
            let det = map.evaluate(theta).det();
            if !((det - 1.0).abs() <= SL2_TOLERANCE) {
                return Err(LabError::InvalidInput(format!(
                    "trigonometric cocycle has determinant {det} at theta={theta}"
                )));
            }
        }
        Ok(map)
    }

    pub fn frequency(&self) -> &Frequency {
        &self.frequency
    }

    pub fn kind(&self) -> &CocycleKind {
        &self.kind
    }

    #[inline]
    pub fn evaluate(&self, theta: f64) -> Mat2 {
        match &self.kind {
            CocycleKind::Schrodinger { potential, energy } => {
                Mat2::new(potential.evaluate(theta) - energy, -1.0, 1.0, 0.0)
            }
            CocycleKind::Constant { matrix } => *matrix,
            CocycleKind::Trig { entries } => Mat2::new(
                entries[0].evaluate(theta),
                entries[1].evaluate(theta),
                entries[2].evaluate(theta),
                entries[3].evaluate(theta),
            ),
        }
    }

    /// The family `A_t = A·e^{tw}` at parameter `t`.
    pub fn family(self, t: f64) -> ParameterFamily {
        ParameterFamily::new(self, t)
    }
}

/// `A_t(θ) = A(θ)·(I + t·w)` with the fixed nilpotent shear `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterFamily {
    base: CocycleMap,
    t: f64,
    validity_window: Option<(f64, f64)>,
}

impl ParameterFamily {
    pub fn new(base: CocycleMap, t: f64) -> Self {
        Self {
            base,
            t,
            validity_window: None,
        }
    }

    pub fn with_window(mut self, t_lo: f64, t_hi: f64) -> Self {
        self.validity_window = Some((t_lo, t_hi));
        self
    }

    pub fn base(&self) -> &CocycleMap {
        &self.base
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn validity_window(&self) -> Option<(f64, f64)> {
        self.validity_window
    }

    pub fn shear_generator(&self) -> Sl2Generator {
        Sl2Generator::SHEAR
    }

    pub fn frequency(&self) -> &Frequency {
        &self.base.frequency
    }

    /// The same family at parameter `t`.
    pub fn at(&self, t: f64) -> Self {
        Self {
            base: self.base.clone(),
            t,
            validity_window: self.validity_window,
        }
    }

    /// The same family at parameter `t + s`.
    pub fn shifted(&self, s: f64) -> Self {
        self.at(self.t + s)
    }

    #[inline]
    pub fn matrix(&self, theta: f64) -> Mat2 {
        self.base.evaluate(theta) * shear_exp(self.t)
    }
}

/// A matrix product stored as `matrix · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledProduct {
    pub matrix: Mat2,
    pub log_scale: f64,
}

impl ScaledProduct {
    const RESCALE_ABOVE: f64 = 1.8446744073709552e19; // 2^64

    pub fn identity() -> Self {
        Self {
            matrix: Mat2::IDENTITY,
            log_scale: 0.0,
        }
    }

    /// Left-multiply by `m`, renormalising when entries grow large.
    #[inline]
    pub fn push(&mut self, m: Mat2) {
        self.matrix = m * self.matrix;
        let size = self.matrix.max_abs();
        if size > Self::RESCALE_ABOVE {
            self.matrix = self.matrix.scale(1.0 / size);
            self.log_scale += size.ln();
        }
    }

    /// The unscaled product; overflows for very long hyperbolic products.
    pub fn to_mat2(&self) -> Mat2 {
        self.matrix.scale(self.log_scale.exp())
    }

    /// `log ‖product‖` in the Euclidean operator norm.
    pub fn log_norm(&self) -> f64 {
        self.matrix.operator_norm().ln() + self.log_scale
    }
}

/// The ordered product `A_t(θ + (n−1)ω) ⋯ A_t(θ)`; `n = 0` gives the identity.
pub fn iterate_product(family: &ParameterFamily, theta: f64, n: usize) -> Mat2 {
    let omega = family.frequency();
    (0..n).fold(Mat2::IDENTITY, |acc, k| {
        family.matrix(omega.shift(theta, k as i64)) * acc
    })
}

/// Overflow-safe variant of [`iterate_product`].
pub fn iterate_product_scaled(family: &ParameterFamily, theta: f64, n: usize) -> ScaledProduct {
    let omega = family.frequency();
    let mut prod = ScaledProduct::identity();
    for k in 0..n {
        prod.push(family.matrix(omega.shift(theta, k as i64)));
    }
    prod
}
