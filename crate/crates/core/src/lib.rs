//! Numerical lab for entire functions defined by Cauchy integrals over
//! unbounded contours: evaluation, orbit iteration, escaping-set grids,
//! box-counting dimension estimates and quasiconformal distortion formulas.

pub mod contour;
pub mod dimension;
pub mod dynamics;
pub mod jet;
pub mod model;
pub mod quadrature;
pub mod rigidity;

use num_complex::Complex64;
use thiserror::Error;

pub use contour::{build_contour, region_membership, ContourFamily, ContourSpec, RegionMembership};
pub use dimension::{
    box_count, estimate_edim, estimate_set_dimension, fit_dimension, BoxCounts, DimensionError, DimensionEstimate,
    GridGeometry, Target,
};
pub use dynamics::{
    classify_grid, ir_candidates, iterate_orbit, jr_candidates, GridClassification, OrbitRecord, OrbitStatus, Window,
};
pub use model::{
    d_from_p, growth_statistic, log_max_modulus, max_modulus, p_from_d, AffineMap, Evaluation, Family, FunctionModel,
    ModelConfig, ModelError,
};
pub use quadrature::{eval_cauchy_integral, CauchyIntegrator, Density, Quadrature};
pub use rigidity::{affine_pushforward, dilatation_at, disc_radius, equivalence_residual, qc_dim_lower_bound};

/// Failure to produce a function value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point {z} lies {distance:e} from the contour")]
    NearSingularity { z: Complex64, distance: f64 },
    #[error("quadrature error estimate {error:e} above tolerance after {subdivisions} subdivisions")]
    ToleranceNotMet { error: f64, subdivisions: usize },
    #[error("modulus exceeds 1e300 (log-modulus {log_modulus:?})")]
    Overflow { log_modulus: Option<f64> },
    #[error("overflow at angle {angle} on the sampling circle")]
    OverflowOnCircle { angle: f64, log_modulus: Option<f64> },
    #[error("{0}")]
    Domain(String),
}
