//! Numerical toolkit for the Kobayashi metric on bounded convex domains in `C^d`.
//!
//! The crate is organised by subsystem:
//!
//! * [`geometry`]: complex vectors, defining-function oracles, boundary distances,
//!   inward normals and complex tangent hyperplanes.
//! * [`models`]: balls, weighted homogeneous balanced polynomials, polynomial
//!   ellipsoids, Siegel domains, the Cayley map and a flat-face test domain.
//! * [`kobayashi`]: exact Poincaré formulas and two-sided distance brackets.
//! * [`gromov`]: normal-line almost-geodesics, quasi-geodesic certificates and
//!   Gromov-product experiments.
//! * [`dynamics`]: automorphisms, orbit iteration, Wolff–Denjoy detection and the
//!   elliptic / parabolic / hyperbolic classification.
//! * [`boundary_type`]: vanishing orders, line type, homogeneous limit models and
//!   anisotropic rescaling with local Hausdorff diagnostics.

pub mod boundary_type;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod gromov;
pub mod kobayashi;
pub mod models;
pub mod numeric;

pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, CVector, ComplexHyperplane, ConvexDomain, DefiningFunction};
pub use kobayashi::{DistanceEstimator, DistanceInterval};

pub use num_complex::Complex64;

/// Library version, embedded in machine-readable reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
