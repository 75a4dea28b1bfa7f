//! Model domains: balls, polynomial ellipsoids, Siegel domains, the Cayley map and a
//! smooth convex domain with flat complex faces.

mod ellipsoid;
mod flat_face;
mod polynomial;
mod spec;
mod weighted;

pub use ellipsoid::{ball, ball_at, PolynomialEllipsoid, SiegelDomain};
pub use flat_face::{flat_face_domain, FlatProfile};
pub use polynomial::{LinePolynomial, RealPolynomial, Term};
pub use spec::{CoefficientSpec, DomainKind, DomainSpec, ModelDomain};
pub use weighted::{weight, ValidationFailure, ValidationReport, WeightedPolynomial};
