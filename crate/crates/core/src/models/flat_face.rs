use std::sync::Arc;

use num_complex::Complex64;

use crate::geometry::{CVector, ConvexDomain, DefiningFunction, Smoothness};
use crate::numeric::exp_integral_e1;
use crate::{Error, Result};

/// `int_0^v exp(-1/x) dx = v e^{-1/v} - E1(1/v)`.
fn flat_integral(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let y = 1.0 / v;
    (v * (-y).exp() - exp_integral_e1(y)).max(0.0)
}

/// `psi(s) = c int_a^s exp(-1/(u - a)) du`, zero for `s <= a`, normalised so `psi(1) = 1`.
#[derive(Clone, Copy, Debug)]
pub struct FlatProfile {
    face_radius: f64,
    norm: f64,
}

impl FlatProfile {
    pub fn new(face_radius: f64) -> Result<Self> {
        if !(face_radius > 0.0 && face_radius < 1.0) {
            return Err(Error::InvalidRadius(face_radius));
        }
        Ok(Self { face_radius, norm: 1.0 / flat_integral(1.0 - face_radius) })
    }

    pub fn value(&self, s: f64) -> f64 {
        self.norm * flat_integral(s - self.face_radius)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let v = s - self.face_radius;
        if v <= 0.0 {
            0.0
        } else {
            self.norm * (-1.0 / v).exp()
        }
    }
}

struct FlatFaceOracle {
    profile: FlatProfile,
}

impl DefiningFunction for FlatFaceOracle {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, z: &CVector) -> f64 {
        z[0].norm_sqr() + self.profile.value(z[1].norm()) - 1.0
    }
    fn gradient(&self, z: &CVector) -> CVector {
        let s = z[1].norm();
        let gz = if s > 0.0 { z[1] * (self.profile.derivative(s) / s) } else { Complex64::new(0.0, 0.0) };
        CVector::new([2.0 * z[0], gz])
    }
    fn describe(&self) -> String {
        format!("flat face (radius {})", self.profile.face_radius)
    }
}

/// `{(w, z) in C^2 : |w|^2 + psi(|z|) < 1}`, whose boundary contains the discs
/// `{w0} x {|z| <= face_radius}` for every `|w0| = 1`.
pub fn flat_face_domain(face_radius: f64) -> Result<ConvexDomain> {
    let profile = FlatProfile::new(face_radius)?;
    ConvexDomain::new(
        Arc::new(FlatFaceOracle { profile }),
        std::f64::consts::SQRT_2 * 1.01,
        CVector::zeros(2),
        Smoothness::CInfty,
        format!("flat_face(radius={face_radius})"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_data, same_complex_tangent};
    use crate::numeric::adaptive_simpson;

    #[test]
    fn profile_matches_quadrature() {
        let p = FlatProfile::new(0.5).unwrap();
        assert!((p.value(1.0) - 1.0).abs() < 1e-14);
        assert_eq!(p.value(0.3), 0.0);
        for s in [0.6, 0.75, 0.9] {
            let direct = p.norm * adaptive_simpson(|u| (-1.0 / (u - 0.5)).exp(), 0.5 + 1e-12, s, 1e-14, 40);
            assert!((p.value(s) - direct).abs() < 1e-9, "{s}: {} vs {direct}", p.value(s));
        }
    }

    #[test]
    fn profile_derivative_matches_finite_difference() {
        let p = FlatProfile::new(0.4).unwrap();
        for s in [0.45, 0.6, 0.95] {
            let h = 1e-6;
            let fd = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
            assert!((fd - p.derivative(s)).abs() < 1e-6 * p.derivative(s).max(1e-3));
        }
    }

    #[test]
    fn invalid_radius() {
        assert!(matches!(flat_face_domain(1.0), Err(Error::InvalidRadius(_))));
        assert!(matches!(flat_face_domain(0.0), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn face_points_share_tangent() {
        let dom = flat_face_domain(0.5).unwrap();
        let a = boundary_data(&dom, &CVector::real(&[1.0, 0.0])).unwrap();
        let b = boundary_data(&dom, &CVector::real(&[1.0, 0.25])).unwrap();
        let c = boundary_data(&dom, &CVector::real(&[-1.0, 0.0])).unwrap();
        assert!(same_complex_tangent(&a, &b, 1e-9));
        assert!(!same_complex_tangent(&a, &c, 1e-9));
    }

    #[test]
    fn z_gradient_vanishes_on_face() {
        let dom = flat_face_domain(0.5).unwrap();
        for k in 0..20 {
            let s = 0.49 * k as f64 / 20.0;
            let z = Complex64::from_polar(s, k as f64);
            let g = dom.gradient(&CVector::new([Complex64::new(1.0, 0.0), z]));
            assert!(g[1].norm() <= 1e-12);
        }
    }

    #[test]
    fn convexity_probe() {
        let dom = flat_face_domain(0.5).unwrap();
        let probe = dom.probe(1000, 17).unwrap();
        assert!(probe.max_convexity_excess < 1e-9, "{probe:?}");
        assert!(probe.min_value_on_bounding_sphere > 0.0);
    }
}
