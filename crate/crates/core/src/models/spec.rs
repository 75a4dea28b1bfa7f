use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ellipsoid::{ball, PolynomialEllipsoid, SiegelDomain};
use super::flat_face::flat_face_domain;
use super::polynomial::Term;
use super::weighted::WeightedPolynomial;
use crate::geometry::ConvexDomain;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Ellipsoid,
    Siegel,
    FlatFace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// JSON description of a model domain.
///
/// `dim` is the ambient dimension; for ellipsoid and Siegel kinds `weights` has one
/// entry per `z` coordinate (so `dim - 1` entries). When `coeffs` is omitted the
/// polynomial defaults to `sum |z_j|^{2 m_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<CoefficientSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

/// A domain built from a [`DomainSpec`].
#[derive(Clone, Debug)]
pub enum ModelDomain {
    Ball(ConvexDomain),
    Ellipsoid(PolynomialEllipsoid),
    Siegel(SiegelDomain),
    FlatFace(ConvexDomain),
}

impl ModelDomain {
    /// Bounded realisation: Siegel domains are replaced by their Cayley ellipsoid.
    pub fn bounded(&self) -> Result<ConvexDomain> {
        match self {
            ModelDomain::Ball(d) | ModelDomain::FlatFace(d) => Ok(d.clone()),
            ModelDomain::Ellipsoid(e) => Ok(e.domain()),
            ModelDomain::Siegel(s) => Ok(s.ellipsoid()?.domain()),
        }
    }
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDomain(e.to_string()))
    }

    pub fn build(&self) -> Result<ModelDomain> {
        if self.dim == 0 {
            return Err(Error::InvalidDomain("dim must be at least 1".into()));
        }
        match self.kind {
            DomainKind::Ball => {
                self.reject_polynomial_fields()?;
                if self.face_radius.is_some() {
                    return Err(Error::InvalidDomain("face_radius only applies to flat_face".into()));
                }
                Ok(ModelDomain::Ball(ball(self.dim, self.radius.unwrap_or(1.0))?))
            }
            DomainKind::FlatFace => {
                self.reject_polynomial_fields()?;
                if self.dim != 2 {
                    return Err(Error::InvalidDomain("flat_face domains live in C^2".into()));
                }
                let r = self.face_radius.ok_or_else(|| Error::InvalidDomain("flat_face needs face_radius".into()))?;
                Ok(ModelDomain::FlatFace(flat_face_domain(r)?))
            }
            DomainKind::Ellipsoid => Ok(ModelDomain::Ellipsoid(PolynomialEllipsoid::new(self.polynomial()?)?)),
            DomainKind::Siegel => Ok(ModelDomain::Siegel(SiegelDomain::new(self.polynomial()?)?)),
        }
    }

    fn reject_polynomial_fields(&self) -> Result<()> {
        if self.weights.is_some() || self.coeffs.is_some() {
            return Err(Error::InvalidDomain(format!("{:?} domains take no weights or coeffs", self.kind)));
        }
        Ok(())
    }

    fn polynomial(&self) -> Result<WeightedPolynomial> {
        if self.dim < 2 {
            return Err(Error::InvalidDomain("polynomial models need dim >= 2".into()));
        }
        if self.face_radius.is_some() || self.radius.is_some() {
            return Err(Error::InvalidDomain("radius fields do not apply to polynomial models".into()));
        }
        let weights = self.weights.clone().ok_or_else(|| Error::InvalidDomain("weights are required".into()))?;
        if weights.len() != self.dim - 1 {
            return Err(Error::DimensionMismatch { expected: self.dim - 1, got: weights.len() });
        }
        match &self.coeffs {
            None => WeightedPolynomial::sum_of_powers(&weights),
            Some(cs) => {
                let terms =
                    cs.iter().map(|c| Term::new(c.alpha.clone(), c.beta.clone(), Complex64::new(c.re, c.im))).collect();
                WeightedPolynomial::new(weights, terms)
            }
        }
    }
}
