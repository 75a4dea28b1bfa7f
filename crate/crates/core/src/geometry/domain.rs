use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CVector, GRADIENT_FLOOR};
use crate::models::RealPolynomial;
use crate::numeric::{brent_root, rng, sphere_directions};
use crate::{Error, Result};

/// A defining function `r` for a convex set `{r < 0}` in `C^d`.
pub trait DefiningFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, z: &CVector) -> f64;

    /// Real gradient of `r`, packed as `g_j = dr/dx_j + i dr/dy_j`.
    ///
    /// With this packing the outward normal is `g / |g|` and the complex tangent
    /// space is `{v : <v, g> = 0}`.
    fn gradient(&self, z: &CVector) -> CVector {
        central_difference_gradient(|w| self.value(w), z)
    }

    /// Symbolic form of `r`, when it is a polynomial in `z` and `conj(z)`.
    fn polynomial(&self) -> Option<RealPolynomial> {
        None
    }

    fn describe(&self) -> String {
        "oracle".to_string()
    }
}

pub(crate) fn central_difference_gradient<F: Fn(&CVector) -> f64>(f: F, z: &CVector) -> CVector {
    let h = 1e-6 * z.norm().max(1.0);
    let mut out = CVector::zeros(z.dim());
    let mut probe = z.clone();
    for j in 0..z.dim() {
        let base = probe[j];
        probe[j] = base + num_complex::Complex64::new(h, 0.0);
        let fxp = f(&probe);
        probe[j] = base - num_complex::Complex64::new(h, 0.0);
        let fxm = f(&probe);
        probe[j] = base + num_complex::Complex64::new(0.0, h);
        let fyp = f(&probe);
        probe[j] = base - num_complex::Complex64::new(0.0, h);
        let fym = f(&probe);
        probe[j] = base;
        out[j] = num_complex::Complex64::new((fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h));
    }
    out
}

/// Closure-backed defining function with a finite-difference gradient.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
    label: String,
}

impl<F> FnOracle<F>
where
    F: Fn(&CVector) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self { dim, f, label: label.into() }
    }
}

impl<F> DefiningFunction for FnOracle<F>
where
    F: Fn(&CVector) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &CVector) -> f64 {
        (self.f)(z)
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    C1Alpha,
    CInfty,
}

/// A bounded convex domain `{r < 0}` given by oracles.
///
/// `center` is any interior reference point; rays are shot from it when the
/// boundary has to be sampled.
#[derive(Clone)]
pub struct ConvexDomain {
    oracle: Arc<dyn DefiningFunction>,
    bounding_radius: f64,
    center: CVector,
    smoothness: Smoothness,
    label: String,
}

impl fmt::Debug for ConvexDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexDomain")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("bounding_radius", &self.bounding_radius)
            .finish()
    }
}

/// Outcome of the sampled invariant probes on a [`ConvexDomain`].
#[derive(Clone, Debug, Serialize)]
pub struct DomainProbe {
    /// Largest `r(lambda p + (1 - lambda) q) - max(r(p), r(q))` seen.
    pub max_convexity_excess: f64,
    /// Smallest gradient norm at sampled boundary points.
    pub min_boundary_gradient: f64,
    /// Smallest `r` on the bounding sphere.
    pub min_value_on_bounding_sphere: f64,
}

impl DomainProbe {
    pub fn passes(&self) -> bool {
        self.max_convexity_excess < 1e-9
            && self.min_boundary_gradient > GRADIENT_FLOOR
            && self.min_value_on_bounding_sphere > 0.0
    }
}

impl ConvexDomain {
    pub fn new(
        oracle: Arc<dyn DefiningFunction>,
        bounding_radius: f64,
        center: CVector,
        smoothness: Smoothness,
        label: impl Into<String>,
    ) -> Result<Self> {
        if center.dim() != oracle.dim() {
            return Err(Error::DimensionMismatch { expected: oracle.dim(), got: center.dim() });
        }
        if oracle.dim() == 0 {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if !(bounding_radius.is_finite() && bounding_radius > center.norm()) {
            return Err(Error::InvalidDomain(format!("bounding radius {bounding_radius} does not enclose the center")));
        }
        let r = oracle.value(&center);
        if !(r < 0.0) {
            return Err(Error::PointOutsideDomain { r });
        }
        Ok(Self { oracle, bounding_radius, center, smoothness, label: label.into() })
    }

    /// Domain from a closure, using a finite-difference gradient.
    pub fn from_fn<F>(dim: usize, bounding_radius: f64, center: CVector, label: &str, f: F) -> Result<Self>
    where
        F: Fn(&CVector) -> f64 + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnOracle::new(dim, label, f)), bounding_radius, center, Smoothness::CInfty, label)
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn oracle(&self) -> &Arc<dyn DefiningFunction> {
        &self.oracle
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn center(&self) -> &CVector {
        &self.center
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, z: &CVector) -> f64 {
        self.oracle.value(z)
    }

    pub fn gradient(&self, z: &CVector) -> CVector {
        self.oracle.gradient(z)
    }

    pub fn contains(&self, z: &CVector) -> bool {
        z.dim() == self.dim() && self.value(z) < 0.0
    }

    pub(crate) fn check_dim(&self, z: &CVector) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.dim() });
        }
        Ok(())
    }

    /// `PointOutsideDomain` unless `z` lies strictly inside.
    pub fn require_interior(&self, z: &CVector) -> Result<()> {
        self.check_dim(z)?;
        let r = self.value(z);
        if r < 0.0 && z.is_finite() {
            Ok(())
        } else {
            Err(Error::PointOutsideDomain { r })
        }
    }

    /// Parameter `t > 0` where the ray `p + t u` leaves the domain.
    ///
    /// `p` must be interior; `u` need not be normalised.
    pub fn ray_exit(&self, p: &CVector, u: &CVector) -> Result<f64> {
        let un = u.norm();
        if un == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let f = |t: f64| self.value(&p.axpy(t, u));
        let f0 = f(0.0);
        if !(f0 < 0.0) {
            return Err(Error::PointOutsideDomain { r: f0 });
        }
        let mut hi = (self.bounding_radius + p.norm()) / un * (1.0 + 1e-9);
        let mut fhi = f(hi);
        let mut tries = 0;
        while !(fhi > 0.0) {
            hi *= 2.0;
            fhi = f(hi);
            tries += 1;
            if tries > 16 {
                return Err(Error::BracketFailure);
            }
        }
        Ok(brent_root(f, 0.0, hi, f0, fhi, 1e-14))
    }

    /// Boundary point hit by the ray from `center` in direction `u`.
    pub fn boundary_point_towards(&self, u: &CVector) -> Result<CVector> {
        let t = self.ray_exit(&self.center, u)?;
        Ok(self.center.axpy(t, u))
    }

    /// Uniformly random point of the domain along a random ray from the center.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> Result<CVector> {
        let dir = random_unit(self.dim(), rng);
        let t = self.ray_exit(&self.center, &dir)?;
        let s: f64 = rng.random::<f64>();
        Ok(self.center.axpy(s * t * (1.0 - 1e-9), &dir))
    }

    /// Sampled checks of convexity, gradient non-degeneracy and boundedness.
    pub fn probe(&self, n: usize, seed: u64) -> Result<DomainProbe> {
        let mut rng = rng(seed);
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..n {
            let p = self.sample_interior(&mut rng)?;
            let q = self.sample_interior(&mut rng)?;
            let lambda: f64 = rng.random();
            let mid = &p.scale(lambda) + &q.scale(1.0 - lambda);
            let e = self.value(&mid) - self.value(&p).max(self.value(&q));
            excess = excess.max(e);
        }
        let mut min_grad = f64::INFINITY;
        let mut min_sphere = f64::INFINITY;
        for dir in sphere_directions(2 * self.dim(), n.max(1), seed ^ 0x9e37_79b9) {
            let u = CVector::from_real(&dir);
            let x = self.boundary_point_towards(&u)?;
            min_grad = min_grad.min(self.gradient(&x).norm());
            let far = u.scale(self.bounding_radius);
            min_sphere = min_sphere.min(self.value(&far));
        }
        Ok(DomainProbe {
            max_convexity_excess: excess,
            min_boundary_gradient: min_grad,
            min_value_on_bounding_sphere: min_sphere,
        })
    }
}

pub(crate) fn random_unit<R: Rng>(d: usize, rng: &mut R) -> CVector {
    loop {
        let v: Vec<f64> = (0..2 * d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return CVector::from_real(&v.iter().map(|a| a / n).collect::<Vec<_>>());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ball;

    #[test]
    fn ray_exit_on_unit_ball() {
        let b = ball(2, 1.0).unwrap();
        let p = CVector::real(&[0.5, 0.0]);
        let t = b.ray_exit(&p, &CVector::real(&[1.0, 0.0])).unwrap();
        assert!((t - 0.5).abs() < 1e-14);
        let t = b.ray_exit(&p, &CVector::real(&[-2.0, 0.0])).unwrap();
        assert!((t - 0.75).abs() < 1e-14);
    }

    #[test]
    fn closure_domain_rejects_exterior_center() {
        let err = ConvexDomain::from_fn(1, 2.0, CVector::real(&[1.5]), "disk", |z| z.norm_sqr() - 1.0);
        assert!(matches!(err, Err(Error::PointOutsideDomain { .. })));
    }

    #[test]
    fn finite_difference_gradient_matches_analytic() {
        let b = ball(2, 1.0).unwrap();
        let z = CVector::from_real(&[0.3, -0.2, 0.1, 0.4]);
        let fd = central_difference_gradient(|w| b.value(w), &z);
        assert!(fd.distance(&b.gradient(&z)) < 1e-8);
    }

    #[test]
    fn probe_passes_on_ball() {
        let b = ball(3, 1.0).unwrap();
        let probe = b.probe(200, 1).unwrap();
        assert!(probe.passes(), "{probe:?}");
    }
}
