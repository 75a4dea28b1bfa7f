use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// A point or tangent vector in `C^d`.
#[derive(Clone, PartialEq, Default)]
pub struct CVector(SmallVec<[Complex64; 4]>);

impl CVector {
    pub fn new(entries: impl IntoIterator<Item = Complex64>) -> Self {
        Self(entries.into_iter().collect())
    }

    pub fn zeros(d: usize) -> Self {
        Self(SmallVec::from_elem(Complex64::new(0.0, 0.0), d))
    }

    /// Builds a vector from real coordinates `(x_1, y_1, ..., x_d, y_d)`.
    pub fn from_real(parts: &[f64]) -> Self {
        Self(parts.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    /// Real vector with all imaginary parts zero.
    pub fn real(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian pairing `<self, other> = sum self_i conj(other_i)`.
    pub fn dot(&self, other: &CVector) -> Complex64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b.conj()).sum()
    }

    /// Real inner product of the underlying `R^{2d}` vectors.
    pub fn real_dot(&self, other: &CVector) -> f64 {
        self.dot(other).re
    }

    pub fn distance(&self, other: &CVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn scale(&self, s: f64) -> CVector {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn scale_c(&self, s: Complex64) -> CVector {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + t * dir`, the workhorse of every ray query.
    pub fn axpy(&self, t: f64, dir: &CVector) -> CVector {
        Self(self.0.iter().zip(dir.0.iter()).map(|(a, b)| a + b * t).collect())
    }

    pub fn axpy_c(&self, t: Complex64, dir: &CVector) -> CVector {
        Self(self.0.iter().zip(dir.0.iter()).map(|(a, b)| a + b * t).collect())
    }

    pub fn conj(&self) -> CVector {
        Self(self.0.iter().map(|c| c.conj()).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Lexicographic total order on `(re, im)` coordinates; used to canonicalise pairs.
    pub fn lex_cmp(&self, other: &CVector) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            let o = a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
            if o.is_ne() {
                return o;
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl Add<&CVector> for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&CVector> for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &CVector {
    type Output = CVector;
    fn mul(self, rhs: f64) -> CVector {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for &CVector {
    type Output = CVector;
    fn mul(self, rhs: Complex64) -> CVector {
        self.scale_c(rhs)
    }
}

impl Neg for &CVector {
    type Output = CVector;
    fn neg(self) -> CVector {
        self.scale(-1.0)
    }
}

impl FromIterator<Complex64> for CVector {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

// Serialised as a list of `[re, im]` pairs.
impl Serialize for CVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(Self(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_pairing_is_conjugate_linear_in_second_slot() {
        let a = CVector::new([Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)]);
        let b = CVector::new([Complex64::new(0.5, 0.0), Complex64::new(2.0, 1.0)]);
        let i = Complex64::i();
        assert!((a.dot(&b.scale_c(i)) - a.dot(&b) * (-i)).norm() < 1e-15);
        assert!((a.dot(&a).re - a.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn real_round_trip() {
        let v = CVector::from_real(&[1.0, -2.0, 3.5, 0.25]);
        assert_eq!(v.to_real(), vec![1.0, -2.0, 3.5, 0.25]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "[[1.0,-2.0],[3.5,0.25]]");
        let back: CVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
