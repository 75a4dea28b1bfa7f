use thiserror::Error;

use crate::models::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies outside the domain (r = {r:e})")]
    PointOutsideDomain { r: f64 },
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("point is not on the boundary (|r| = {r:e} exceeds tolerance)")]
    NotOnBoundary { r: f64 },
    #[error("gradient norm {norm:e} is below the degeneracy floor")]
    DegenerateGradient { norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("evaluation too close to the pole of the Cayley map")]
    PoleProximity,
    #[error("invalid face radius {0}; must lie in (0, 1)")]
    InvalidRadius(f64),
    #[error("point {0} lies outside the unit disk")]
    OutsideDisk(num_complex::Complex64),
    #[error("point {0} lies outside the upper half plane")]
    OutsideHalfplane(num_complex::Complex64),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("normal segment of length {eps} leaves the domain")]
    EpsTooLarge { eps: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("boundary points share a complex tangent hyperplane")]
    SameFace,
    #[error("iterate {step} left the domain (r = {r:e}); map is not a self-map")]
    EscapeDetected { step: usize, r: f64 },
    #[error("function does not vanish at the origin (g(0) = {value:e})")]
    NotVanishing { value: f64 },
    #[error("rescaled fits do not converge: {0}")]
    NoConvergence(String),
    #[error("set does not meet the test ball")]
    EmptyIntersection,
    #[error("invalid weighted polynomial: {0}")]
    InvalidPolynomial(ValidationReport),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("root bracketing failed along a ray")]
    BracketFailure,
}
