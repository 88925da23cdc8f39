//! Numerical laboratory for one-parameter families of quasi-periodic SL(2,ℝ) cocycles.
//!
//! The pipeline: build a [`ParameterFamily`], compute its invariant slope fields
//! with [`compute_bundles`], then integrate the Lyapunov exponent and its
//! parameter derivative, locate the edge parameter and sweep toward it.

pub mod assumptions;
pub mod bundles;
pub mod cocycle;
pub mod difference;
pub mod edge;
pub mod error;
pub mod export;
pub mod fit;
pub mod frequency;
pub mod lyapunov;
pub mod matrix;
pub mod potential;
pub mod projective;
pub mod quadrature;
pub mod stats;
pub mod sweep;

pub use assumptions::{verify_assumptions, AssumptionOptions, AssumptionReport};
pub use bundles::{
    compute_bundles, stable_direction, unstable_direction, BundleOptions, BundlePair, SlopeEvaluator,
};
pub use cocycle::{
    iterate_product, iterate_product_scaled, schrodinger_cocycle, CocycleMap, ParameterFamily,
};
pub use difference::{difference_field, growth_ratio, DifferenceField, DistanceField};
pub use edge::{certify_uh, find_edge, CertifyOptions, EdgeEstimate, UHCertificate};
pub use error::{LabError, Result};
pub use fit::{fit_power_law, PowerLawFit};
pub use frequency::Frequency;
pub use lyapunov::{
    derivative_fd, derivative_bundle, le_from_bundle, le_norm_growth, DerivativeEstimate,
    LyapunovEstimate,
};
pub use matrix::{shear_exp, Mat2, Sl2Generator};
pub use potential::{Potential, PotentialKind, TrigPolynomial};
pub use projective::{mobius_apply, Slope};
pub use quadrature::QuadratureOptions;
pub use stats::kernel_evaluations;
pub use sweep::{run_sweep, SweepOptions, SweepRecord};
