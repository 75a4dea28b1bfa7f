use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CVector;
use crate::{Error, Result};

/// Complex affine hyperplane `{z : <z, normal> = offset}` with `|normal| = 1`.
///
/// Hyperplanes produced from boundary data are oriented: `normal` is the outward
/// unit normal, so the domain lies in the open half-space `Re(<z, normal> - offset) < 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexHyperplane {
    pub normal: CVector,
    pub offset: Complex64,
}

impl ComplexHyperplane {
    pub fn new(normal: CVector, offset: Complex64) -> Result<Self> {
        let n = normal.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroDirection);
        }
        Ok(Self { normal: normal.scale(1.0 / n), offset: offset / n })
    }

    /// The hyperplane through `x` with complex normal `normal`.
    pub fn through(x: &CVector, normal: &CVector) -> Result<Self> {
        let a = normal.normalized().ok_or(Error::ZeroDirection)?;
        let b = x.dot(&a);
        Ok(Self { normal: a, offset: b })
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `<z, normal> - offset`; `|.|` of this is the Euclidean distance to the hyperplane.
    pub fn affine_value(&self, z: &CVector) -> Complex64 {
        z.dot(&self.normal) - self.offset
    }

    pub fn distance(&self, z: &CVector) -> f64 {
        self.affine_value(z).norm()
    }

    /// Distance from `z` to the real supporting hyperplane `Re(<z, normal> - offset) = 0`,
    /// positive on the domain side.
    pub fn real_gap(&self, z: &CVector) -> f64 {
        -self.affine_value(z).re
    }

    /// Image of `z` under the projection onto the upper half plane,
    /// `zeta = -i (<z, normal> - offset)`; `Im zeta = real_gap(z)`.
    pub fn to_upper_half_plane(&self, z: &CVector) -> Complex64 {
        -Complex64::i() * self.affine_value(z)
    }

    pub fn contains(&self, z: &CVector, tol: f64) -> bool {
        self.distance(z) <= tol
    }

    /// Orthonormal basis of the direction space `{v : <v, normal> = 0}`.
    pub fn direction_basis(&self) -> Vec<CVector> {
        let d = self.dim();
        let mut basis: Vec<CVector> = Vec::with_capacity(d.saturating_sub(1));
        let mut frame = vec![self.normal.clone()];
        for k in 0..d {
            if basis.len() + 1 == d {
                break;
            }
            let mut v = CVector::basis(d, k);
            for f in &frame {
                let c = v.dot(f);
                v = v.axpy_c(-c, f);
            }
            // second pass for numerical orthogonality
            for f in &frame {
                let c = v.dot(f);
                v = v.axpy_c(-c, f);
            }
            if let Some(u) = v.normalized().filter(|_| v.norm() > 1e-8) {
                frame.push(u.clone());
                basis.push(u);
            }
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_and_projection() {
        let h = ComplexHyperplane::through(&CVector::real(&[1.0, 0.0]), &CVector::real(&[1.0, 0.0])).unwrap();
        let p = CVector::real(&[0.25, 0.7]);
        assert!((h.distance(&p) - 0.75).abs() < 1e-15);
        assert!((h.real_gap(&p) - 0.75).abs() < 1e-15);
        let zeta = h.to_upper_half_plane(&p);
        assert!((zeta.im - 0.75).abs() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        let n = CVector::new([Complex64::new(0.3, 0.4), Complex64::new(-0.1, 0.7), Complex64::new(0.2, 0.0)]);
        let h = ComplexHyperplane::through(&CVector::zeros(3), &n).unwrap();
        let b = h.direction_basis();
        assert_eq!(b.len(), 2);
        for (i, u) in b.iter().enumerate() {
            assert!(u.dot(&h.normal).norm() < 1e-14);
            for (j, v) in b.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u.dot(v) - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }
}
