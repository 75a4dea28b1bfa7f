use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::CVector;

/// One monomial `coeff * z^alpha * conj(z)^beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub coeff: Complex64,
}

impl Term {
    pub fn new(alpha: Vec<u32>, beta: Vec<u32>, coeff: Complex64) -> Self {
        Self { alpha, beta, coeff }
    }

    pub fn total_degree(&self) -> u32 {
        self.alpha.iter().sum::<u32>() + self.beta.iter().sum::<u32>()
    }

    fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = self.coeff;
        for (j, zj) in z.iter().enumerate() {
            if self.alpha[j] > 0 {
                acc *= zj.powu(self.alpha[j]);
            }
            if self.beta[j] > 0 {
                acc *= zj.conj().powu(self.beta[j]);
            }
        }
        acc
    }

    /// `|coeff| * prod |z_j|^{alpha_j + beta_j}`, a scale for cancellation-aware comparisons.
    fn magnitude(&self, z: &[Complex64]) -> f64 {
        let mut acc = self.coeff.norm();
        for (j, zj) in z.iter().enumerate() {
            acc *= zj.norm().powi((self.alpha[j] + self.beta[j]) as i32);
        }
        acc
    }
}

/// Real-valued polynomial in `z` and `conj(z)` on `C^d`, stored as a list of terms.
///
/// Only the real part of the term sum is returned by [`RealPolynomial::eval`]; for a
/// Hermitian-symmetric coefficient set the imaginary part is zero anyway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealPolynomial {
    dim: usize,
    terms: Vec<Term>,
}

impl RealPolynomial {
    pub fn new(dim: usize, terms: Vec<Term>) -> Self {
        assert!(terms.iter().all(|t| t.alpha.len() == dim && t.beta.len() == dim), "term arity must equal dim");
        Self { dim, terms }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, vec![Term::new(vec![0; dim], vec![0; dim], Complex64::new(c, 0.0))])
    }

    /// `|z_j|^2`.
    pub fn abs_sq(dim: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        Self::new(dim, vec![Term::new(e.clone(), e, Complex64::new(1.0, 0.0))])
    }

    /// `|z - c|^2 - radius^2`.
    pub fn sphere(center: &CVector, radius: f64) -> Self {
        let d = center.dim();
        let mut terms = Vec::with_capacity(3 * d + 1);
        for j in 0..d {
            let mut e = vec![0; d];
            e[j] = 1;
            terms.push(Term::new(e.clone(), e.clone(), Complex64::new(1.0, 0.0)));
            if center[j] != Complex64::new(0.0, 0.0) {
                terms.push(Term::new(e.clone(), vec![0; d], -center[j].conj()));
                terms.push(Term::new(vec![0; d], e, -center[j]));
            }
        }
        terms.push(Term::new(vec![0; d], vec![0; d], Complex64::new(center.norm_sqr() - radius * radius, 0.0)));
        Self::new(d, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        self.terms.iter().map(|t| t.eval(z)).sum::<Complex64>().re
    }

    /// `sum |term|`, used as a scale when comparing values that may cancel.
    pub fn magnitude(&self, z: &[Complex64]) -> f64 {
        self.terms.iter().map(|t| t.magnitude(z)).sum()
    }

    /// Real gradient packed as `g_j = dr/dx_j + i dr/dy_j = 2 dr/d(conj z_j)`.
    pub fn gradient(&self, z: &[Complex64]) -> CVector {
        let mut g = CVector::zeros(self.dim);
        for t in &self.terms {
            for j in 0..self.dim {
                if t.beta[j] == 0 {
                    continue;
                }
                let mut lowered = t.clone();
                lowered.beta[j] -= 1;
                lowered.coeff *= t.beta[j] as f64;
                g[j] += lowered.eval(z);
            }
        }
        // r = Re S, so 2 dr/d(conj z) = dS/d(conj z) + conj(dS/dz).
        for t in &self.terms {
            for j in 0..self.dim {
                if t.alpha[j] == 0 {
                    continue;
                }
                let mut lowered = t.clone();
                lowered.alpha[j] -= 1;
                lowered.coeff *= t.alpha[j] as f64;
                g[j] += lowered.eval(z).conj();
            }
        }
        g
    }

    /// Sum of two polynomials on the same space.
    pub fn add(&self, other: &RealPolynomial) -> RealPolynomial {
        assert_eq!(self.dim, other.dim);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.dim, terms)
    }

    /// Re-index into a bigger space: variable `j` becomes variable `offset + j` of `new_dim`.
    pub fn embed(&self, new_dim: usize, offset: usize) -> RealPolynomial {
        assert!(offset + self.dim <= new_dim);
        let lift = |v: &Vec<u32>| {
            let mut out = vec![0; new_dim];
            out[offset..offset + self.dim].copy_from_slice(v);
            out
        };
        Self::new(new_dim, self.terms.iter().map(|t| Term::new(lift(&t.alpha), lift(&t.beta), t.coeff)).collect())
    }

    /// Symbolic restriction to the complex line `zeta -> base + zeta * dir`.
    pub fn restrict_to_line(&self, base: &CVector, dir: &CVector) -> LinePolynomial {
        assert_eq!(base.dim(), self.dim);
        assert_eq!(dir.dim(), self.dim);
        let mut out = LinePolynomial::default();
        for t in &self.terms {
            let mut acc = LinePolynomial::constant(t.coeff);
            for j in 0..self.dim {
                if t.alpha[j] > 0 {
                    acc = acc.mul(&LinePolynomial::linear(base[j], dir[j], false).pow(t.alpha[j]));
                }
                if t.beta[j] > 0 {
                    acc = acc.mul(&LinePolynomial::linear(base[j].conj(), dir[j].conj(), true).pow(t.beta[j]));
                }
            }
            out = out.add(&acc);
        }
        out
    }
}

/// Polynomial in `zeta` and `conj(zeta)`: map `(a, b) -> c` for `c zeta^a conj(zeta)^b`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinePolynomial {
    coeffs: BTreeMap<(u32, u32), Complex64>,
}

impl LinePolynomial {
    fn constant(c: Complex64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 0), c);
        Self { coeffs }
    }

    /// `x + v zeta`, or `x + v conj(zeta)` when `conjugate` is set.
    fn linear(x: Complex64, v: Complex64, conjugate: bool) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 0), x);
        coeffs.insert(if conjugate { (0, 1) } else { (1, 0) }, v);
        Self { coeffs }
    }

    fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            *coeffs.entry(*k).or_default() += c;
        }
        Self { coeffs }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut coeffs: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        for ((a1, b1), c1) in &self.coeffs {
            for ((a2, b2), c2) in &other.coeffs {
                *coeffs.entry((a1 + a2, b1 + b2)).or_default() += c1 * c2;
            }
        }
        Self { coeffs }
    }

    fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn coefficient(&self, a: u32, b: u32) -> Complex64 {
        self.coeffs.get(&(a, b)).copied().unwrap_or_default()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, *c))
    }

    pub fn eval(&self, zeta: Complex64) -> f64 {
        self.coeffs.iter().map(|((a, b), c)| c * zeta.powu(*a) * zeta.conj().powu(*b)).sum::<Complex64>().re
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Smallest total degree `a + b` carrying a coefficient above `rel_tol * scale`,
    /// or `None` when every coefficient is negligible.
    ///
    /// Coefficients are first paired as `(c_ab + conj c_ba) / 2`, the coefficients of the
    /// real part that [`LinePolynomial::eval`] returns.
    pub fn order(&self, rel_tol: f64) -> Option<u32> {
        let real = self.real_part();
        let cut = rel_tol * self.scale().max(1.0);
        real.coeffs.iter().filter(|(_, c)| c.norm() > cut).map(|((a, b), _)| a + b).min()
    }

    pub fn real_part(&self) -> LinePolynomial {
        let mut coeffs = BTreeMap::new();
        for (&(a, b), c) in &self.coeffs {
            let h = 0.5 * (c + self.coefficient(b, a).conj());
            coeffs.insert((a, b), h);
        }
        for &(a, b) in self.coeffs.keys() {
            coeffs.entry((b, a)).or_insert_with(|| 0.5 * self.coefficient(a, b).conj());
        }
        Self { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sphere_polynomial_matches_direct_formula() {
        let center = CVector::new([c(0.1, -0.2), c(0.3, 0.0)]);
        let p = RealPolynomial::sphere(&center, 1.5);
        let z = CVector::new([c(0.4, 0.5), c(-0.7, 0.2)]);
        let direct = (&z - &center).norm_sqr() - 2.25;
        assert!((p.eval(z.as_slice()) - direct).abs() < 1e-14);
        let g = p.gradient(z.as_slice());
        let expected = (&z - &center).scale(2.0);
        assert!(g.distance(&expected) < 1e-14);
    }

    #[test]
    fn line_restriction_matches_evaluation() {
        // |z1|^2 |z2|^4 + Re(z1^2 conj(z2)) style mixture
        let p = RealPolynomial::new(
            2,
            vec![
                Term::new(vec![1, 2], vec![1, 2], c(1.0, 0.0)),
                Term::new(vec![2, 0], vec![0, 1], c(0.5, 0.25)),
                Term::new(vec![0, 1], vec![2, 0], c(0.5, -0.25)),
            ],
        );
        let base = CVector::new([c(0.3, 0.1), c(-0.2, 0.4)]);
        let dir = CVector::new([c(0.6, -0.3), c(0.1, 0.9)]);
        let line = p.restrict_to_line(&base, &dir);
        for zeta in [c(0.0, 0.0), c(0.2, -0.7), c(1.3, 0.4)] {
            let z = base.axpy_c(zeta, &dir);
            assert!((line.eval(zeta) - p.eval(z.as_slice())).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_order_along_axis() {
        let p = RealPolynomial::new(1, vec![Term::new(vec![2], vec![2], c(1.0, 0.0))]);
        let line = p.restrict_to_line(&CVector::zeros(1), &CVector::real(&[1.0]));
        assert_eq!(line.order(1e-10), Some(4));
        assert_eq!(RealPolynomial::zero(1).restrict_to_line(&CVector::zeros(1), &CVector::real(&[1.0])).order(1e-10), None);
    }
}
