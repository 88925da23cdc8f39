use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("projective iteration did not converge at theta={theta}: residual {residual:e} after {iterations} steps")]
    NonConvergence {
        theta: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("slope left the invariant cone at theta={theta}: r_u={r_u}, r_s={r_s}")]
    ConeViolation { theta: f64, r_u: f64, r_s: f64 },

    #[error("bundle ordering r_u > r_s violated at theta={theta}: r_u={r_u}, r_s={r_s}")]
    OrderingViolation { theta: f64, r_u: f64, r_s: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {error:e} exceeds tolerance {tolerance:e}")]
    QuadratureNotConverged { error: f64, tolerance: f64 },

    #[error("finite-difference stencil t={t}, h={h} reaches the edge estimate {edge}")]
    WindowViolation { t: f64, h: f64, edge: f64 },

    #[error("bad bracket [{t_lo}, {t_hi}]: {reason}")]
    BadBracket { t_lo: f64, t_hi: f64, reason: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
