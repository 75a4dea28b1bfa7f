use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::polynomial::{RealPolynomial, Term};
use crate::geometry::CVector;
use crate::numeric::{pattern_search, rng, sphere_directions, PatternOptions};
use crate::{Error, Result};

/// `sum alpha_i / (2 m_i)`, exactly.
pub fn weight(m: &[u32], alpha: &[u32]) -> Result<Ratio<u64>> {
    if m.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), got: alpha.len() });
    }
    if m.iter().any(|&mi| mi == 0) {
        return Err(Error::InvalidParameter("weights must be positive integers".into()));
    }
    Ok(m.iter().zip(alpha).fold(Ratio::from_integer(0), |acc, (&mi, &ai)| acc + Ratio::new(ai as u64, 2 * mi as u64)))
}

/// One reason a candidate polynomial is rejected.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationFailure {
    ArityMismatch { alpha: Vec<u32>, beta: Vec<u32> },
    NotHermitian { alpha: Vec<u32>, beta: Vec<u32> },
    Unbalanced { alpha: Vec<u32>, beta: Vec<u32>, weight_alpha: String, weight_beta: String },
    Inhomogeneous { defect: f64 },
    Negative { value: f64 },
    BadWeights,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ArityMismatch { alpha, beta } => write!(f, "term {alpha:?},{beta:?} has the wrong number of indices"),
            Self::NotHermitian { alpha, beta } => {
                write!(f, "coefficient of {alpha:?},{beta:?} is not the conjugate of its transpose")
            }
            Self::Unbalanced { alpha, beta, weight_alpha, weight_beta } => write!(
                f,
                "term {alpha:?},{beta:?} has weights {weight_alpha} and {weight_beta}; both must be 1/2"
            ),
            Self::Inhomogeneous { defect } => write!(f, "weighted dilation identity fails (relative defect {defect:e})"),
            Self::Negative { value } => write!(f, "polynomial takes the negative value {value:e}"),
            Self::BadWeights => write!(f, "weights must be positive integers"),
        }
    }
}

/// Structured outcome of [`WeightedPolynomial::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
    /// Largest relative defect of `p(t^delta z) = t p(z)` over the samples.
    pub homogeneity_defect: f64,
    /// `p > 0` at every sampled nonzero point.
    pub nondegenerate: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failures.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.failures.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Real polynomial `p(z) = sum C_ab z^a conj(z)^b` on `C^n` with a weight vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPolynomial {
    weights: Vec<u32>,
    terms: Vec<Term>,
}

impl WeightedPolynomial {
    /// Validating constructor; rejects anything [`Self::validate`] flags.
    pub fn new(weights: Vec<u32>, terms: Vec<Term>) -> Result<Self> {
        let p = Self::unchecked(weights, terms);
        let report = p.validate();
        if report.is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidPolynomial(report))
        }
    }

    /// Stores the data as given; use [`Self::validate`] to inspect it.
    pub fn unchecked(weights: Vec<u32>, terms: Vec<Term>) -> Self {
        Self { weights, terms }
    }

    /// `|z|^{2m}` on `C` with weight `m`.
    pub fn monomial_power(m: u32) -> Result<Self> {
        Self::sum_of_powers(&[m])
    }

    /// `sum_j |z_j|^{2 m_j}` with weights `m`.
    pub fn sum_of_powers(m: &[u32]) -> Result<Self> {
        let n = m.len();
        let terms = (0..n)
            .map(|j| {
                let mut e = vec![0; n];
                e[j] = m[j];
                Term::new(e.clone(), e, Complex64::new(1.0, 0.0))
            })
            .collect();
        Self::new(m.to_vec(), terms)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Dilation exponents `delta_i = 1 / (2 m_i)`.
    pub fn deltas(&self) -> Vec<f64> {
        self.weights.iter().map(|&m| 0.5 / m as f64).collect()
    }

    pub fn to_real_polynomial(&self) -> RealPolynomial {
        RealPolynomial::new(self.dim(), self.terms.clone())
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        self.to_real_polynomial().eval(z)
    }

    /// `(t^{delta_1} z_1, ..., t^{delta_n} z_n)`.
    pub fn dilate(&self, t: f64, z: &[Complex64]) -> Vec<Complex64> {
        z.iter().zip(self.deltas()).map(|(zi, d)| zi * t.powf(d)).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let n = self.dim();
        if self.weights.iter().any(|&m| m == 0) {
            failures.push(ValidationFailure::BadWeights);
        }
        let mut merged: BTreeMap<(Vec<u32>, Vec<u32>), Complex64> = BTreeMap::new();
        for t in &self.terms {
            if t.alpha.len() != n || t.beta.len() != n {
                failures.push(ValidationFailure::ArityMismatch { alpha: t.alpha.clone(), beta: t.beta.clone() });
                continue;
            }
            *merged.entry((t.alpha.clone(), t.beta.clone())).or_default() += t.coeff;
        }
        if !failures.is_empty() {
            return ValidationReport { failures, homogeneity_defect: f64::NAN, nondegenerate: false };
        }
        let half = Ratio::new(1u64, 2);
        for ((alpha, beta), c) in &merged {
            let partner = merged.get(&(beta.clone(), alpha.clone())).copied().unwrap_or_default();
            if (c - partner.conj()).norm() > 1e-12 * c.norm().max(1.0) {
                failures.push(ValidationFailure::NotHermitian { alpha: alpha.clone(), beta: beta.clone() });
            }
            let wa = weight(&self.weights, alpha).expect("arity checked");
            let wb = weight(&self.weights, beta).expect("arity checked");
            if wa != half || wb != half {
                failures.push(ValidationFailure::Unbalanced {
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    weight_alpha: wa.to_string(),
                    weight_beta: wb.to_string(),
                });
            }
        }

        let poly = self.to_real_polynomial();
        let mut rng = rng(0x5eed);
        let mut defect: f64 = 0.0;
        let mut nondegenerate = true;
        let mut min_value = f64::INFINITY;
        for _ in 0..100 {
            let z: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))).collect();
            let t = 10f64.powf(rng.random_range(-3.0..3.0));
            let lhs = poly.eval(&self.dilate(t, &z));
            let rhs = t * poly.eval(&z);
            let scale = t * poly.magnitude(&z);
            if scale > 0.0 {
                defect = defect.max((lhs - rhs).abs() / scale);
            }
            let value = poly.eval(&z);
            min_value = min_value.min(value + 1e-12 * poly.magnitude(&z));
        }
        if n > 0 && self.min_on_unit_sphere() <= 1e-9 {
            nondegenerate = false;
        }
        if defect > 1e-10 {
            failures.push(ValidationFailure::Inhomogeneous { defect });
        }
        if min_value < 0.0 {
            failures.push(ValidationFailure::Negative { value: min_value });
        }
        ValidationReport { failures, homogeneity_defect: defect, nondegenerate }
    }

    /// Minimum of `p` on the unit sphere: seeded samples plus the coordinate axes,
    /// polished by compass search. Zero exactly when `p` vanishes on some nonzero ray,
    /// since the zero set is invariant under the weighted dilations.
    pub fn min_on_unit_sphere(&self) -> f64 {
        let n = self.dim();
        let poly = self.to_real_polynomial();
        let on_sphere = |x: &[f64]| -> f64 {
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return f64::INFINITY;
            }
            let z: Vec<Complex64> = (0..n).map(|j| Complex64::new(x[2 * j], x[2 * j + 1]) / norm).collect();
            poly.eval(&z)
        };
        let mut starts = sphere_directions(2 * n, 64 * n, 0xa11);
        for j in 0..2 * n {
            let mut e = vec![0.0; 2 * n];
            e[j] = 1.0;
            starts.push(e);
        }
        let mut scored: Vec<(f64, Vec<f64>)> = starts.into_iter().map(|x| (on_sphere(&x), x)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = scored[0].0;
        for (_, x0) in scored.iter().take(3) {
            let opts = PatternOptions { initial_step: 0.2, min_step: 1e-9, max_evals: 4000, rotate_seed: Some(7) };
            best = best.min(pattern_search(on_sphere, x0, opts).1);
        }
        best
    }

    /// Weighted-homogeneity check at one point: `p(t^delta z) - t p(z)`.
    pub fn homogeneity_residual(&self, t: f64, z: &CVector) -> f64 {
        let poly = self.to_real_polynomial();
        poly.eval(&self.dilate(t, z.as_slice())) - t * poly.eval(z.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(&[1, 2], &[0, 0]).unwrap(), r(0, 1));
        assert_eq!(weight(&[1, 2], &[1, 0]).unwrap(), r(1, 2));
        for m in 1..6 {
            assert_eq!(weight(&[m], &[m]).unwrap(), r(1, 2));
        }
        assert!(matches!(weight(&[1, 2], &[1]), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn weight_is_additive(m in prop::collection::vec(1u32..6, 3), a in prop::collection::vec(0u32..7, 3), b in prop::collection::vec(0u32..7, 3)) {
            let sum: Vec<u32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert_eq!(weight(&m, &sum).unwrap(), weight(&m, &a).unwrap() + weight(&m, &b).unwrap());
        }

        #[test]
        fn dilation_identity_on_valid_polynomials(
            m in prop::collection::vec(1u32..4, 2),
            t in -3.0f64..3.0,
            re in prop::collection::vec(-1.0f64..1.0, 2),
            im in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let p = WeightedPolynomial::sum_of_powers(&m).unwrap();
            let z = CVector::new(re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)));
            let t = 10f64.powf(t);
            let scale = t * p.to_real_polynomial().magnitude(z.as_slice()).max(1e-300);
            prop_assert!(p.homogeneity_residual(t, &z).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn quartic_is_valid() {
        let p = WeightedPolynomial::monomial_power(2).unwrap();
        let report = p.validate();
        assert!(report.is_valid());
        assert!(report.nondegenerate);
        assert!(report.homogeneity_defect < 1e-10);
    }

    #[test]
    fn mixed_balanced_polynomial_is_valid() {
        // |z1|^2 + |z2|^4 + Re(z1 conj(z2)^2) / 2 with m = (1, 2)
        let c = |x: f64| Complex64::new(x, 0.0);
        let terms = vec![
            Term::new(vec![1, 0], vec![1, 0], c(1.0)),
            Term::new(vec![0, 2], vec![0, 2], c(1.0)),
            Term::new(vec![1, 0], vec![0, 2], c(0.25)),
            Term::new(vec![0, 2], vec![1, 0], c(0.25)),
        ];
        let p = WeightedPolynomial::new(vec![1, 2], terms).unwrap();
        assert!(p.validate().nondegenerate);
    }

    #[test]
    fn cubic_term_is_rejected_with_citation() {
        // |z|^3-like: z^2 conj(z) with m = 2 has weights 1/2 and 1/4
        let terms = vec![
            Term::new(vec![2], vec![1], Complex64::new(1.0, 0.0)),
            Term::new(vec![1], vec![2], Complex64::new(1.0, 0.0)),
        ];
        let err = WeightedPolynomial::new(vec![2], terms).unwrap_err();
        let Error::InvalidPolynomial(report) = err else { panic!("wrong error") };
        assert!(report
            .failures
            .iter()
            .any(|f| matches!(f, ValidationFailure::Unbalanced { alpha, .. } if alpha == &vec![2])));
        assert!(report.to_string().contains("[2]"));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let terms = vec![Term::new(vec![1], vec![1], Complex64::new(1.0, 0.5))];
        let report = WeightedPolynomial::unchecked(vec![1], terms).validate();
        assert!(report.failures.iter().any(|f| matches!(f, ValidationFailure::NotHermitian { .. })));
    }

    #[test]
    fn negative_polynomial_is_rejected() {
        let terms = vec![Term::new(vec![1], vec![1], Complex64::new(-1.0, 0.0))];
        let report = WeightedPolynomial::unchecked(vec![1], terms).validate();
        assert!(report.failures.iter().any(|f| matches!(f, ValidationFailure::Negative { .. })));
    }
}
