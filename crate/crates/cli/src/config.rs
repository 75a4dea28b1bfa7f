use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use kobalt_core::models::DomainSpec;
use kobalt_core::{CVector, Complex64};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::maps::MapSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Distance,
    Gromov,
    Dichotomy,
    Delta4,
    Wolff,
    Classify,
    Search,
    Translate,
    Linetype,
    Scaling,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Distance => "distance",
            CommandName::Gromov => "gromov",
            CommandName::Dichotomy => "dichotomy",
            CommandName::Delta4 => "delta4",
            CommandName::Wolff => "wolff",
            CommandName::Classify => "classify",
            CommandName::Search => "search",
            CommandName::Translate => "translate",
            CommandName::Linetype => "linetype",
            CommandName::Scaling => "scaling",
        }
    }

    /// Commands whose results depend on seeded samples (hyperplanes, sampled points).
    pub fn needs_seed(self) -> bool {
        !matches!(self, CommandName::Linetype | CommandName::Scaling)
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Experiment description read from `--config`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain_spec: DomainSpec,
    #[serde(default)]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub params: Option<serde_json::Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::Validation(format!("config: {e}")))
    }

    /// Typed parameters for `cmd`; a missing `params` object means all defaults.
    pub fn params(&self, cmd: CommandName) -> Result<Params, Failure> {
        let raw = self.params.clone().unwrap_or_else(|| serde_json::json!({}));
        fn typed<T: serde::de::DeserializeOwned>(raw: serde_json::Value) -> Result<T, Failure> {
            serde_json::from_value(raw).map_err(|e| Failure::Validation(format!("params: {e}")))
        }
        Ok(match cmd {
            CommandName::Distance => Params::Distance(typed(raw)?),
            CommandName::Gromov => {
                let mut raw = raw;
                if let Some(obj) = raw.as_object_mut() {
                    obj.entry("mode").or_insert_with(|| "products".into());
                }
                Params::Gromov(typed(raw)?)
            }
            CommandName::Dichotomy => Params::Dichotomy(typed(raw)?),
            CommandName::Delta4 => Params::Delta4(typed(raw)?),
            CommandName::Wolff => Params::Wolff(typed(raw)?),
            CommandName::Classify => Params::Classify(typed(raw)?),
            CommandName::Search => Params::Search(typed(raw)?),
            CommandName::Translate => Params::Translate(typed(raw)?),
            CommandName::Linetype => Params::Linetype(typed(raw)?),
            CommandName::Scaling => Params::Scaling(typed(raw)?),
        })
    }
}

/// A point of `C^d` written as `[[re, im], ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonPoint(pub Vec<[f64; 2]>);

impl JsonPoint {
    pub fn to_cvector(&self, dim: usize) -> Result<CVector, Failure> {
        if self.0.len() != dim {
            return Err(Failure::Validation(format!("point has {} coordinates, domain has dimension {dim}", self.0.len())));
        }
        if self.0.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Failure::Validation("point coordinates must be finite".into()));
        }
        Ok(CVector::new(self.0.iter().map(|[re, im]| Complex64::new(*re, *im))))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Params {
    Distance(DistanceParams),
    Gromov(GromovParams),
    Dichotomy(DichotomyParams),
    Delta4(Delta4Params),
    Wolff(WolffParams),
    Classify(ClassifyParams),
    Search(SearchParams),
    Translate(TranslateParams),
    Linetype(LinetypeParams),
    Scaling(ScalingParams),
}

fn ten() -> usize {
    10
}

fn nine_tenths() -> f64 {
    0.9
}

/// Explicit pairs, or `pairs` seeded pairs each at most `max_fraction` of the way
/// from the domain centre to the boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceParams {
    #[serde(default = "ten")]
    pub pairs: usize,
    #[serde(default = "nine_tenths")]
    pub max_fraction: f64,
    #[serde(default)]
    pub points: Option<Vec<[JsonPoint; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GromovParams {
    /// `(p | q)_o` for seeded triples or explicit ones.
    Products {
        #[serde(default = "ten")]
        triples: usize,
        #[serde(default = "nine_tenths")]
        max_fraction: f64,
        #[serde(default)]
        base: Option<JsonPoint>,
        #[serde(default)]
        points: Option<Vec<[JsonPoint; 2]>>,
    },
    /// Quasi-geodesic certificate of the normal curve at a boundary point.
    NormalCurve {
        x: JsonPoint,
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default = "six")]
        t_max: f64,
        #[serde(default = "fifteen")]
        grid: usize,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "three_halves")]
        b: f64,
    },
}

fn six() -> f64 {
    6.0
}

fn fifteen() -> usize {
    15
}

fn one() -> f64 {
    1.0
}

fn three_halves() -> f64 {
    1.5
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PlanName {
    Grid,
    Diagonal,
}

fn twelve() -> usize {
    12
}

fn diagonal() -> PlanName {
    PlanName::Diagonal
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyParams {
    pub x: JsonPoint,
    pub y: JsonPoint,
    #[serde(default)]
    pub base: Option<JsonPoint>,
    #[serde(default = "twelve")]
    pub levels: usize,
    #[serde(default = "diagonal")]
    pub plan: PlanName,
    /// Also probe how deep the witness paths reach (needs `x`, `y` on different faces).
    #[serde(default)]
    pub visibility: bool,
}

fn eight() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Delta4Params {
    #[serde(default = "eight")]
    pub points: usize,
    #[serde(default = "nine_tenths")]
    pub max_fraction: f64,
    #[serde(default)]
    pub explicit: Option<Vec<JsonPoint>>,
}

fn steps() -> usize {
    400
}

fn wolff_tol() -> f64 {
    1e-6
}

fn m_cap() -> f64 {
    10.0
}

fn face_tol() -> f64 {
    0.1
}

/// Orbit settings shared by the dynamics commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSettings {
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default = "wolff_tol")]
    pub tol: f64,
    #[serde(default = "m_cap")]
    pub m_cap: f64,
    #[serde(default = "face_tol")]
    pub face_tol: f64,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        Self { steps: steps(), tol: wolff_tol(), m_cap: m_cap(), face_tol: face_tol() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WolffParams {
    pub map: MapSpec,
    #[serde(default)]
    pub start: Option<JsonPoint>,
    #[serde(default)]
    pub orbit: OrbitSettings,
    /// Coordinate drawn in the optional orbit plot.
    #[serde(default)]
    pub plot_coordinate: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyParams {
    pub map: MapSpec,
    #[serde(default)]
    pub start: Option<JsonPoint>,
    #[serde(default)]
    pub orbit: OrbitSettings,
    #[serde(default)]
    pub plot_coordinate: usize,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub start: Option<JsonPoint>,
    /// Longest word length tried.
    #[serde(default = "two")]
    pub budget: usize,
    #[serde(default)]
    pub orbit: OrbitSettings,
}

fn four() -> f64 {
    4.0
}

fn thirty_three() -> usize {
    33
}

fn forty() -> usize {
    40
}

/// Shadowing of the glued normal curve through the attracting and repelling points
/// by an orbit. Missing endpoints are found by classifying `map`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateParams {
    pub map: MapSpec,
    #[serde(default)]
    pub base: Option<JsonPoint>,
    #[serde(default)]
    pub forward: Option<JsonPoint>,
    #[serde(default)]
    pub backward: Option<JsonPoint>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "four")]
    pub t_max: f64,
    #[serde(default = "thirty_three")]
    pub t_count: usize,
    #[serde(default = "forty")]
    pub k_max: usize,
    #[serde(default)]
    pub orbit: OrbitSettings,
    #[serde(default)]
    pub plot_coordinate: usize,
}

fn cap() -> u32 {
    20
}

/// Boundary points to type; Siegel domains take points of the unbounded model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinetypeParams {
    #[serde(default)]
    pub points: Vec<JsonPoint>,
    /// Extra boundary points hit by seeded rays from the centre.
    #[serde(default)]
    pub sample: usize,
    #[serde(default = "cap")]
    pub cap: u32,
}

fn times() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 5.0]
}

fn sixty_four() -> usize {
    64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    #[serde(default)]
    pub x: Option<JsonPoint>,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    #[serde(default = "times")]
    pub times: Vec<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "sixty_four")]
    pub directions: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let ok = r#"{"domain_spec":{"kind":"ball","dim":2},"seed":1}"#;
        assert!(ExperimentConfig::parse(ok).is_ok());
        let bad = r#"{"domain_spec":{"kind":"ball","dim":2},"seed":1,"colour":"red"}"#;
        assert!(matches!(ExperimentConfig::parse(bad), Err(Failure::Validation(_))));
        let cfg = ExperimentConfig::parse(r#"{"domain_spec":{"kind":"ball","dim":2},"params":{"pairz":3}}"#).unwrap();
        assert!(cfg.params(CommandName::Distance).is_err());
    }

    #[test]
    fn defaults_fill_missing_params() {
        let cfg = ExperimentConfig::parse(r#"{"domain_spec":{"kind":"ball","dim":2}}"#).unwrap();
        let Params::Distance(p) = cfg.params(CommandName::Distance).unwrap() else { panic!() };
        assert_eq!((p.pairs, p.max_fraction), (10, 0.9));
        let Params::Gromov(g) = cfg.params(CommandName::Gromov).unwrap() else { panic!() };
        assert!(matches!(g, GromovParams::Products { triples: 10, .. }));
    }

    #[test]
    fn points_check_dimension() {
        let p: JsonPoint = serde_json::from_str("[[1.0, 0.0], [0.0, 0.5]]").unwrap();
        assert_eq!(p.to_cvector(2).unwrap()[1], Complex64::new(0.0, 0.5));
        assert!(p.to_cvector(3).is_err());
        assert!(JsonPoint(vec![[f64::NAN, 0.0]]).to_cvector(1).is_err());
    }
}
