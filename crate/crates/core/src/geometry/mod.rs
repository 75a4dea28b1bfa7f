//! Complex-vector arithmetic, convex-domain oracles and boundary geometry.

mod boundary;
mod cvector;
mod domain;
mod hyperplane;

pub use boundary::{
    boundary_data, boundary_distance, directional_boundary_distance, hyperplane_min_defining_value,
    nearest_boundary_point, same_complex_tangent, supporting_hyperplanes, BoundaryPoint, DirectionalHit,
};
pub(crate) use boundary::boundary_data_unchecked;
pub(crate) use domain::random_unit;
pub use cvector::CVector;
pub use domain::{ConvexDomain, DefiningFunction, DomainProbe, FnOracle, Smoothness};
pub use hyperplane::ComplexHyperplane;

/// `|r(x)|` below this counts as "on the boundary".
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Gradients with norm below this are treated as degenerate.
pub const GRADIENT_FLOOR: f64 = 1e-10;
