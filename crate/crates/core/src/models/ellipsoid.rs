use std::sync::Arc;

use num_complex::Complex64;

use super::polynomial::{RealPolynomial, Term};
use super::weighted::WeightedPolynomial;
use crate::geometry::{CVector, ConvexDomain, DefiningFunction, Smoothness};
use crate::numeric::sphere_directions;
use crate::{Error, Result};

const POLE_FLOOR: f64 = 1e-12;

struct BallOracle {
    center: CVector,
    radius: f64,
}

impl DefiningFunction for BallOracle {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn value(&self, z: &CVector) -> f64 {
        (z - &self.center).norm_sqr() - self.radius * self.radius
    }
    fn gradient(&self, z: &CVector) -> CVector {
        (z - &self.center).scale(2.0)
    }
    fn polynomial(&self) -> Option<RealPolynomial> {
        Some(RealPolynomial::sphere(&self.center, self.radius))
    }
    fn describe(&self) -> String {
        format!("ball(radius={})", self.radius)
    }
}

/// Euclidean ball of the given radius centred at the origin of `C^d`.
pub fn ball(d: usize, radius: f64) -> Result<ConvexDomain> {
    ball_at(CVector::zeros(d), radius)
}

pub fn ball_at(center: CVector, radius: f64) -> Result<ConvexDomain> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius {radius} must be positive")));
    }
    let bound = center.norm() + radius * 1.01;
    let label = format!("ball(d={}, radius={radius})", center.dim());
    ConvexDomain::new(Arc::new(BallOracle { center: center.clone(), radius }), bound, center, Smoothness::CInfty, label)
}

struct EllipsoidOracle {
    poly: WeightedPolynomial,
    real: RealPolynomial,
}

impl DefiningFunction for EllipsoidOracle {
    fn dim(&self) -> usize {
        self.poly.dim() + 1
    }
    fn value(&self, z: &CVector) -> f64 {
        z[0].norm_sqr() + self.real.eval(&z.as_slice()[1..]) - 1.0
    }
    fn gradient(&self, z: &CVector) -> CVector {
        let gz = self.real.gradient(&z.as_slice()[1..]);
        std::iter::once(2.0 * z[0]).chain(gz.iter().copied()).collect()
    }
    fn polynomial(&self) -> Option<RealPolynomial> {
        let d = self.dim();
        Some(
            RealPolynomial::abs_sq(d, 0)
                .add(&RealPolynomial::constant(d, -1.0))
                .add(&self.real.embed(d, 1)),
        )
    }
    fn describe(&self) -> String {
        format!("polynomial ellipsoid (weights {:?})", self.poly.weights())
    }
}

/// `{(w, z) : |w|^2 + p(z) < 1}`; coordinate 0 is `w`.
#[derive(Clone, Debug)]
pub struct PolynomialEllipsoid {
    poly: WeightedPolynomial,
    domain: ConvexDomain,
}

impl PolynomialEllipsoid {
    pub fn new(poly: WeightedPolynomial) -> Result<Self> {
        let report = poly.validate();
        if !report.is_valid() {
            return Err(Error::InvalidPolynomial(report));
        }
        if !report.nondegenerate {
            return Err(Error::InvalidDomain("p vanishes at a nonzero sample; the ellipsoid is unbounded".into()));
        }
        let oracle: Arc<dyn DefiningFunction> =
            Arc::new(EllipsoidOracle { real: poly.to_real_polynomial(), poly: poly.clone() });
        let d = oracle.dim();
        let label = format!("ellipsoid(weights={:?})", poly.weights());
        let probe = ConvexDomain::new(oracle.clone(), 4.0, CVector::zeros(d), Smoothness::CInfty, label.clone())?;
        let mut reach: f64 = 1.0;
        for dir in sphere_directions(2 * d, 64 * d, 0xe11) {
            reach = reach.max(probe.ray_exit(&CVector::zeros(d), &CVector::from_real(&dir))?);
        }
        let domain = ConvexDomain::new(oracle, 1.25 * reach, CVector::zeros(d), Smoothness::CInfty, label)?;
        Ok(Self { poly, domain })
    }

    /// `{|w|^2 + |z|^{2m} < 1}` in `C^2`.
    pub fn power(m: u32) -> Result<Self> {
        Self::new(WeightedPolynomial::monomial_power(m)?)
    }

    pub fn poly(&self) -> &WeightedPolynomial {
        &self.poly
    }

    pub fn domain(&self) -> ConvexDomain {
        self.domain.clone()
    }

    pub fn dim(&self) -> usize {
        self.poly.dim() + 1
    }
}

struct SiegelOracle {
    real: RealPolynomial,
    dim: usize,
}

impl DefiningFunction for SiegelOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &CVector) -> f64 {
        self.real.eval(&q.as_slice()[1..]) - q[0].im
    }
    fn gradient(&self, q: &CVector) -> CVector {
        let gz = self.real.gradient(&q.as_slice()[1..]);
        std::iter::once(Complex64::new(0.0, -1.0)).chain(gz.iter().copied()).collect()
    }
    fn polynomial(&self) -> Option<RealPolynomial> {
        let d = self.dim;
        let mut e = vec![0; d];
        e[0] = 1;
        let minus_im_w = RealPolynomial::new(
            d,
            vec![
                Term::new(e.clone(), vec![0; d], Complex64::new(0.0, 0.5)),
                Term::new(vec![0; d], e, Complex64::new(0.0, -0.5)),
            ],
        );
        Some(self.real.embed(d, 1).add(&minus_im_w))
    }
    fn describe(&self) -> String {
        "siegel domain".into()
    }
}

/// Unbounded model `{(w, z) : Im w > p(z)}`; coordinate 0 is `w`.
#[derive(Clone)]
pub struct SiegelDomain {
    poly: WeightedPolynomial,
    oracle: Arc<SiegelOracle>,
}

impl std::fmt::Debug for SiegelDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SiegelDomain").field("weights", &self.poly.weights()).finish()
    }
}

impl SiegelDomain {
    pub fn new(poly: WeightedPolynomial) -> Result<Self> {
        let report = poly.validate();
        if !report.is_valid() {
            return Err(Error::InvalidPolynomial(report));
        }
        let oracle = Arc::new(SiegelOracle { real: poly.to_real_polynomial(), dim: poly.dim() + 1 });
        Ok(Self { poly, oracle })
    }

    pub fn power(m: u32) -> Result<Self> {
        Self::new(WeightedPolynomial::monomial_power(m)?)
    }

    pub fn poly(&self) -> &WeightedPolynomial {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.dim() + 1
    }

    /// Defining function `p(z) - Im w`.
    pub fn oracle(&self) -> Arc<dyn DefiningFunction> {
        self.oracle.clone()
    }

    pub fn value(&self, q: &CVector) -> f64 {
        self.oracle.value(q)
    }

    pub fn contains(&self, q: &CVector) -> bool {
        q.dim() == self.dim() && self.value(q) < 0.0
    }

    /// The bounded ellipsoid this domain is biholomorphic to through [`Self::cayley_map`].
    pub fn ellipsoid(&self) -> Result<PolynomialEllipsoid> {
        PolynomialEllipsoid::new(self.poly.clone())
    }

    /// `(w, z) -> ((1 + i w/4) / (1 - i w/4), z_j / (1 - i w/4)^{1/m_j})`, principal powers.
    pub fn cayley_map(&self, q: &CVector) -> Result<CVector> {
        self.check(q)?;
        let den = Complex64::new(1.0, 0.0) - Complex64::i() * q[0] / 4.0;
        if den.norm() < POLE_FLOOR {
            return Err(Error::PoleProximity);
        }
        let num = Complex64::new(1.0, 0.0) + Complex64::i() * q[0] / 4.0;
        let log_den = den.ln();
        let mut out = CVector::zeros(q.dim());
        out[0] = num / den;
        for (j, &m) in self.poly.weights().iter().enumerate() {
            out[j + 1] = q[j + 1] * (-log_den / m as f64).exp();
        }
        Ok(out)
    }

    /// Inverse of [`Self::cayley_map`]; fails near `w' = -1`, the image of infinity.
    pub fn cayley_inverse(&self, e: &CVector) -> Result<CVector> {
        self.check(e)?;
        let one = Complex64::new(1.0, 0.0);
        let plus = e[0] + one;
        if plus.norm() < POLE_FLOOR {
            return Err(Error::PoleProximity);
        }
        let den = 2.0 / plus;
        let log_den = den.ln();
        let mut out = CVector::zeros(e.dim());
        out[0] = Complex64::new(0.0, -4.0) * (e[0] - one) / plus;
        for (j, &m) in self.poly.weights().iter().enumerate() {
            out[j + 1] = e[j + 1] * (log_den / m as f64).exp();
        }
        Ok(out)
    }

    fn check(&self, q: &CVector) -> Result<()> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: q.dim() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BOUNDARY_TOL;
    use crate::numeric::rng;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ellipsoid_gradient_and_polynomial_agree_with_oracle() {
        let e = PolynomialEllipsoid::power(2).unwrap();
        let dom = e.domain();
        let poly = dom.oracle().polynomial().unwrap();
        let z = CVector::new([c(0.3, -0.2), c(0.5, 0.4)]);
        assert!((poly.eval(z.as_slice()) - dom.value(&z)).abs() < 1e-14);
        assert!(poly.gradient(z.as_slice()).distance(&dom.gradient(&z)) < 1e-14);
        let fd = crate::geometry::FnOracle::new(2, "fd", |w: &CVector| dom.value(w));
        assert!(fd.gradient(&z).distance(&dom.gradient(&z)) < 1e-8);
    }

    #[test]
    fn ellipsoid_bounding_radius_is_safe() {
        let e = PolynomialEllipsoid::power(3).unwrap();
        let probe = e.domain().probe(300, 4).unwrap();
        assert!(probe.passes(), "{probe:?}");
    }

    #[test]
    fn degenerate_polynomial_gives_unbounded_error() {
        // p = |z1|^2 on C^2 vanishes on the z2 axis
        let poly = WeightedPolynomial::new(
            vec![1, 1],
            vec![Term::new(vec![1, 0], vec![1, 0], c(1.0, 0.0))],
        )
        .unwrap();
        assert!(matches!(PolynomialEllipsoid::new(poly), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn cayley_examples() {
        let s = SiegelDomain::power(2).unwrap();
        let origin = s.cayley_map(&CVector::zeros(2)).unwrap();
        assert!(origin.distance(&CVector::real(&[1.0, 0.0])) < 1e-15);
        let centre = s.cayley_map(&CVector::new([c(0.0, 4.0), c(0.0, 0.0)])).unwrap();
        assert!(centre.norm() < 1e-15);
        assert!(matches!(s.cayley_map(&CVector::new([c(0.0, -4.0), c(0.0, 0.0)])), Err(Error::PoleProximity)));
        assert!(matches!(s.cayley_inverse(&CVector::real(&[-1.0, 0.0])), Err(Error::PoleProximity)));
    }

    fn sample_siegel<R: Rng>(s: &SiegelDomain, rng: &mut R) -> CVector {
        let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let floor = s.poly().eval(&[z]);
        let w = c(rng.random_range(-5.0..5.0), floor + 10f64.powf(rng.random_range(-2.0..1.0)));
        CVector::new([w, z])
    }

    #[test]
    fn cayley_round_trip_and_mapping_property() {
        for m in [1, 2, 3] {
            let s = SiegelDomain::power(m).unwrap();
            let e = s.ellipsoid().unwrap().domain();
            let mut rng = rng(m as u64);
            for _ in 0..100 {
                let q = sample_siegel(&s, &mut rng);
                let image = s.cayley_map(&q).unwrap();
                assert!(e.value(&image) < 0.0);
                let back = s.cayley_inverse(&image).unwrap();
                assert!(back.distance(&q) < 1e-10 * q.norm().max(1.0), "{back} vs {q}");
            }
        }
    }

    #[test]
    fn cayley_maps_boundary_to_boundary() {
        let s = SiegelDomain::power(2).unwrap();
        let e = s.ellipsoid().unwrap().domain();
        let mut rng = rng(99);
        for _ in 0..100 {
            let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let q = CVector::new([c(rng.random_range(-5.0..5.0), s.poly().eval(&[z])), z]);
            assert!(s.value(&q).abs() <= BOUNDARY_TOL);
            assert!(e.value(&s.cayley_map(&q).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn siegel_polynomial_matches_oracle() {
        let s = SiegelDomain::power(2).unwrap();
        let poly = s.oracle().polynomial().unwrap();
        let q = CVector::new([c(0.3, 1.2), c(-0.4, 0.7)]);
        assert!((poly.eval(q.as_slice()) - s.value(&q)).abs() < 1e-14);
        assert!(poly.gradient(q.as_slice()).distance(&s.oracle().gradient(&q)) < 1e-14);
    }
}
