//! Potentials for Schrödinger cocycles: a closed catalog of 1-periodic functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// `c + Σ_k a_k cos(2πkθ) + b_k sin(2πkθ)`, with `k` starting at 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { constant, cos, sin }
    }

    #[inline]
    pub fn evaluate(&self, theta: f64) -> f64 {
        let mut acc = self.constant;
        for (k, &a) in self.cos.iter().enumerate() {
            acc += a * (2.0 * PI * (k + 1) as f64 * theta).cos();
        }
        for (k, &b) in self.sin.iter().enumerate() {
            acc += b * (2.0 * PI * (k + 1) as f64 * theta).sin();
        }
        acc
    }

    /// Guaranteed enclosure of the range.
    pub fn bounds(&self) -> (f64, f64) {
        let spread: f64 = self.cos.iter().chain(&self.sin).map(|x| x.abs()).sum();
        (self.constant - spread, self.constant + spread)
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.cos.iter().chain(&self.sin).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    /// `λ·cos(2πθ)`, minimum at θ = 1/2.
    Cosine,
    /// `1/(1 + λ² sin²(πθ))`, minimum at θ = 1/2.
    Peaked,
    /// `λ·p(θ)` for a trigonometric polynomial `p`.
    Trig(TrigPolynomial),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    pub coupling: f64,
}

impl Potential {
    pub fn new(kind: PotentialKind, coupling: f64) -> Result<Self> {
        if !(coupling >= 0.0) || !coupling.is_finite() {
            return Err(LabError::InvalidInput(format!(
                "coupling must be a finite non-negative number, got {coupling}"
            )));
        }
        if let PotentialKind::Trig(p) = &kind {
            if !p.is_finite() {
                return Err(LabError::InvalidInput(
                    "trigonometric potential has non-finite coefficients".into(),
                ));
            }
        }
        Ok(Self { kind, coupling })
    }

    pub fn zero() -> Self {
        Self {
            kind: PotentialKind::Zero,
            coupling: 0.0,
        }
    }

    /// `V ≡ c`.
    pub fn constant(c: f64) -> Self {
        Self {
            kind: PotentialKind::Trig(TrigPolynomial::constant(c)),
            coupling: 1.0,
        }
    }

    pub fn cosine(coupling: f64) -> Result<Self> {
        Self::new(PotentialKind::Cosine, coupling)
    }

    pub fn peaked(coupling: f64) -> Result<Self> {
        Self::new(PotentialKind::Peaked, coupling)
    }

    #[inline]
    pub fn evaluate(&self, theta: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Cosine => self.coupling * (2.0 * PI * theta).cos(),
            PotentialKind::Peaked => {
                let s = (PI * theta).sin();
                1.0 / (1.0 + self.coupling * self.coupling * s * s)
            }
            PotentialKind::Trig(p) => self.coupling * p.evaluate(theta),
        }
    }

    /// Guaranteed enclosure `(min V, max V)`.
    pub fn bounds(&self) -> (f64, f64) {
        match &self.kind {
            PotentialKind::Zero => (0.0, 0.0),
            PotentialKind::Cosine => (-self.coupling, self.coupling),
            PotentialKind::Peaked => (1.0 / (1.0 + self.coupling * self.coupling), 1.0),
            PotentialKind::Trig(p) => {
                let (lo, hi) = p.bounds();
                (self.coupling * lo, self.coupling * hi)
            }
        }
    }

    /// `∫ V dθ` over one period.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            PotentialKind::Zero | PotentialKind::Cosine => 0.0,
            PotentialKind::Peaked => 1.0 / (1.0 + self.coupling * self.coupling).sqrt(),
            PotentialKind::Trig(p) => self.coupling * p.constant,
        }
    }

    /// Location of the minimum when the catalog knows it in closed form.
    pub fn argmin(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Cosine | PotentialKind::Peaked if self.coupling > 0.0 => Some(0.5),
            _ => None,
        }
    }
}
