use kobalt_core::dynamics::Automorphism;
use kobalt_core::models::{DomainSpec, ModelDomain, SiegelDomain};
use kobalt_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// An automorphism written in JSON.
///
/// Siegel-model maps act on the bounded realisation through the Cayley map, so they
/// need an ellipsoid or Siegel domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    BallMobius { a: [f64; 2] },
    BallUnitary { phases: Vec<f64> },
    SiegelDilation { t: f64 },
    SiegelTranslation { s: f64 },
    SiegelUnitary { theta: f64 },
    Inverse { map: Box<MapSpec> },
    /// `maps[0] o maps[1] o ...`.
    Compose { maps: Vec<MapSpec> },
}

fn siegel_model(model: &ModelDomain) -> Result<SiegelDomain, Failure> {
    match model {
        ModelDomain::Siegel(s) => Ok(s.clone()),
        ModelDomain::Ellipsoid(e) => Ok(SiegelDomain::new(e.poly().clone())?),
        _ => Err(Failure::Validation("Siegel-model maps need an ellipsoid or siegel domain".into())),
    }
}

impl MapSpec {
    pub fn build(&self, spec: &DomainSpec, model: &ModelDomain) -> Result<Automorphism, Failure> {
        let dim = spec.dim;
        Ok(match self {
            MapSpec::BallMobius { a } => {
                if !matches!(model, ModelDomain::Ball(_)) {
                    return Err(Failure::Validation("ball_mobius needs a ball domain".into()));
                }
                if spec.radius.unwrap_or(1.0) != 1.0 {
                    return Err(Failure::Validation("ball_mobius needs the unit ball".into()));
                }
                Automorphism::ball_mobius(dim, Complex64::new(a[0], a[1]))?
            }
            MapSpec::BallUnitary { phases } => {
                if !matches!(model, ModelDomain::Ball(_)) {
                    return Err(Failure::Validation("ball_unitary needs a ball domain".into()));
                }
                if phases.len() != dim {
                    return Err(Failure::Validation(format!("ball_unitary needs {dim} phases, got {}", phases.len())));
                }
                Automorphism::ball_unitary(phases)
            }
            MapSpec::SiegelDilation { t } => {
                let s = siegel_model(model)?;
                Automorphism::siegel_dilation(s.poly().weights(), *t)?.conjugate_by_cayley(&s)
            }
            MapSpec::SiegelTranslation { s: shift } => {
                let s = siegel_model(model)?;
                Automorphism::siegel_translation(s.dim(), *shift).conjugate_by_cayley(&s)
            }
            MapSpec::SiegelUnitary { theta } => {
                let s = siegel_model(model)?;
                Automorphism::siegel_unitary(s.poly().weights(), *theta).conjugate_by_cayley(&s)
            }
            MapSpec::Inverse { map } => map.build(spec, model)?.inverse(),
            MapSpec::Compose { maps } => {
                let mut built = maps.iter().map(|m| m.build(spec, model));
                let first = built.next().ok_or_else(|| Failure::Validation("compose needs at least one map".into()))??;
                built.try_fold(first, |acc, m| Ok::<_, Failure>(acc.compose(&m?)))?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kobalt_core::CVector;

    fn model(json: &str) -> (DomainSpec, ModelDomain) {
        let spec = DomainSpec::from_json(json).unwrap();
        let model = spec.build().unwrap();
        (spec, model)
    }

    #[test]
    fn maps_need_matching_domains() {
        let ball = model(r#"{"kind":"ball","dim":2}"#);
        let ell = model(r#"{"kind":"ellipsoid","dim":2,"weights":[2]}"#);
        let dil: MapSpec = serde_json::from_str(r#"{"kind":"siegel_dilation","t":0.5}"#).unwrap();
        assert!(matches!(dil.build(&ball.0, &ball.1), Err(Failure::Validation(_))));
        let phi = dil.build(&ell.0, &ell.1).unwrap();
        let z = CVector::real(&[0.1, 0.2]);
        assert!(phi.apply_inverse(&phi.apply(&z).unwrap()).unwrap().distance(&z) < 1e-12);
        let mob: MapSpec = serde_json::from_str(r#"{"kind":"ball_mobius","a":[0.5,0.0]}"#).unwrap();
        assert!(mob.build(&ball.0, &ball.1).is_ok());
        assert!(mob.build(&ell.0, &ell.1).is_err());
        let rot: MapSpec = serde_json::from_str(r#"{"kind":"ball_unitary","phases":[1.0]}"#).unwrap();
        assert!(rot.build(&ball.0, &ball.1).is_err());
    }

    #[test]
    fn compose_and_inverse_follow_the_words() {
        let ball = model(r#"{"kind":"ball","dim":1}"#);
        let word: MapSpec = serde_json::from_str(
            r#"{"kind":"compose","maps":[{"kind":"ball_mobius","a":[0.5,0.0]},{"kind":"inverse","map":{"kind":"ball_mobius","a":[0.5,0.0]}}]}"#,
        )
        .unwrap();
        let id = word.build(&ball.0, &ball.1).unwrap();
        let z = CVector::new([Complex64::new(0.3, -0.2)]);
        assert!(id.apply(&z).unwrap().distance(&z) < 1e-14);
        let empty: MapSpec = serde_json::from_str(r#"{"kind":"compose","maps":[]}"#).unwrap();
        assert!(empty.build(&ball.0, &ball.1).is_err());
    }
}
