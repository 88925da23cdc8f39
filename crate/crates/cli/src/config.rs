//! Experiment configuration: `[family]`, `[numerics]`, `[sweep]`, `[output]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cocolab::edge::{schrodinger_bracket, CertifyOptions};
use cocolab::{
    schrodinger_cocycle, BundleOptions, Frequency, ParameterFamily, Potential, PotentialKind,
    QuadratureOptions, SweepOptions, TrigPolynomial,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    Zero,
    Cosine,
    Peaked,
    Trig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub potential: PotentialName,
    pub coupling: f64,
    /// Trigonometric potential `coupling · (constant + Σ cos_k cos 2πkθ + sin_k sin 2πkθ)`.
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    /// `golden` or a continued fraction such as `[0; 2, 1^3, ...]`.
    pub frequency: String,
    pub t_lo: Option<f64>,
    pub t_hi: Option<f64>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            potential: PotentialName::Zero,
            coupling: 1.0,
            constant: 0.0,
            cos: Vec::new(),
            sin: Vec::new(),
            frequency: "golden".into(),
            t_lo: None,
            t_hi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub grid: usize,
    pub bundle_tol: f64,
    pub iteration_cap: usize,
    pub quad_tol: f64,
    pub bisection_tol: f64,
    pub certify_samples: usize,
    pub d_floor: f64,
    pub residual_tol: f64,
    pub norm_steps: usize,
    pub burn_in: usize,
    pub fd_step: Option<f64>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid: 4096,
            bundle_tol: 1e-10,
            iteration_cap: 200_000,
            quad_tol: 1e-9,
            bisection_tol: 1e-8,
            certify_samples: 512,
            d_floor: 1e-12,
            residual_tol: 1e-8,
            norm_steps: 1_000_000,
            burn_in: 1000,
            fd_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub g0: f64,
    pub ratio: f64,
    pub count: usize,
    /// Edge location; located by bisection when absent.
    pub t0: Option<f64>,
    /// `L(t₀)`; extrapolated from the sweep when absent.
    pub l_edge: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            g0: 1e-2,
            ratio: 2.0,
            count: 14,
            t0: None,
            l_edge: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub cache: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            cache: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    pub numerics: NumericsConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

fn positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field} must be a positive finite number, got {x}")))
    }
}

fn at_least(field: &str, x: usize, min: usize) -> Result<(), CliError> {
    if x >= min {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field} must be at least {min}, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let f = &self.family;
        if !(f.coupling >= 0.0 && f.coupling.is_finite()) {
            return Err(CliError::Config(format!(
                "family.coupling must be a finite non-negative number, got {}",
                f.coupling
            )));
        }
        if !f.constant.is_finite() || f.cos.iter().chain(&f.sin).any(|x| !x.is_finite()) {
            return Err(CliError::Config("family.constant, family.cos and family.sin must be finite".into()));
        }
        Frequency::parse(&f.frequency).map_err(|e| CliError::Config(format!("family.frequency: {e}")))?;
        if let (Some(lo), Some(hi)) = (f.t_lo, f.t_hi) {
            if !(lo < hi) {
                return Err(CliError::Config(format!("family.t_lo ({lo}) must be below family.t_hi ({hi})")));
            }
        }
        let n = &self.numerics;
        at_least("numerics.grid", n.grid, 4)?;
        if n.grid % 4 != 0 {
            return Err(CliError::Config(format!("numerics.grid must be a multiple of 4, got {}", n.grid)));
        }
        positive("numerics.bundle_tol", n.bundle_tol)?;
        at_least("numerics.iteration_cap", n.iteration_cap, 2)?;
        positive("numerics.quad_tol", n.quad_tol)?;
        positive("numerics.bisection_tol", n.bisection_tol)?;
        at_least("numerics.certify_samples", n.certify_samples, 1)?;
        positive("numerics.d_floor", n.d_floor)?;
        positive("numerics.residual_tol", n.residual_tol)?;
        at_least("numerics.norm_steps", n.norm_steps, 1)?;
        if let Some(h) = n.fd_step {
            positive("numerics.fd_step", h)?;
        }
        let s = &self.sweep;
        positive("sweep.g0", s.g0)?;
        if !(s.ratio > 1.0 && s.ratio.is_finite()) {
            return Err(CliError::Config(format!("sweep.ratio must exceed 1, got {}", s.ratio)));
        }
        at_least("sweep.count", s.count, 5)?;
        if let Some(t0) = s.t0 {
            if !t0.is_finite() {
                return Err(CliError::Config("sweep.t0 must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Potential {
        let f = &self.family;
        let kind = match f.potential {
            PotentialName::Zero => return Potential::zero(),
            PotentialName::Cosine => PotentialKind::Cosine,
            PotentialName::Peaked => PotentialKind::Peaked,
            PotentialName::Trig => PotentialKind::Trig(TrigPolynomial::new(f.constant, f.cos.clone(), f.sin.clone())),
        };
        Potential::new(kind, f.coupling).expect("validated")
    }

    pub fn frequency(&self) -> Frequency {
        Frequency::parse(&self.family.frequency).expect("validated")
    }

    /// The Schrödinger family at base energy 0, so that the parameter is the energy.
    pub fn builder(&self) -> impl Fn(f64) -> ParameterFamily + Sync + Send + Clone {
        let v = self.potential();
        let w = self.frequency();
        move |t| schrodinger_cocycle(v.clone(), 0.0, w.clone()).family(t)
    }

    pub fn bracket(&self) -> (f64, f64) {
        let (lo, hi) = schrodinger_bracket(&self.potential());
        (self.family.t_lo.unwrap_or(lo), self.family.t_hi.unwrap_or(hi))
    }

    pub fn bundle_options(&self) -> BundleOptions {
        BundleOptions {
            tol: self.numerics.bundle_tol,
            iteration_cap: self.numerics.iteration_cap,
            ..BundleOptions::default()
        }
    }

    pub fn quadrature_options(&self) -> QuadratureOptions {
        QuadratureOptions {
            rel_tol: self.numerics.quad_tol,
            ..QuadratureOptions::default()
        }
    }

    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            bundle: self.bundle_options(),
            samples: self.numerics.certify_samples,
            d_floor: self.numerics.d_floor,
            residual_tol: self.numerics.residual_tol,
            ..CertifyOptions::default()
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            grid: self.numerics.grid,
            bundle: self.bundle_options(),
            quadrature: self.quadrature_options(),
            fd_step: self.numerics.fd_step,
            finite_difference: true,
        }
    }
}
