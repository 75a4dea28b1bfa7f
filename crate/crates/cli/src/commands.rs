use std::f64::consts::PI;

use kobalt_core::boundary_type::{frankel_scaling, oracle_line_type, scaling_diagnostics, TypeValue};
use kobalt_core::dynamics::{
    classify, classify_with_orbits, hyperbolic_search, orbit_estimator, translation_check, wolff_denjoy, ClassifyOptions,
    WolffOptions, WolffReport,
};
use kobalt_core::geometry::{boundary_data, same_complex_tangent, BOUNDARY_TOL, GRADIENT_FLOOR};
use kobalt_core::gromov::{
    certify_quasi_geodesic, concatenated_normal_curve, four_point_delta, normal_curve, normal_eps,
    product_dichotomy_experiment, visibility_probe, DichotomyPlan,
};
use kobalt_core::kobayashi::BracketOptions;
use kobalt_core::models::{DomainSpec, ModelDomain, SiegelDomain, WeightedPolynomial};
use kobalt_core::numeric::{rng, sphere_directions};
use kobalt_core::{CVector, Complex64, ConvexDomain, DefiningFunction, DistanceEstimator, DistanceInterval};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::failure::Failure;
use crate::output::{num, point_cells, point_header, Mark, Plot, Series, Table};

/// Overrides for the distance-bracket settings; unset flags keep the command's defaults.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct BracketFlags {
    /// Seeded supporting hyperplanes per estimator [default: 64, orbit commands 32]
    #[arg(long)]
    pub hyperplanes: Option<usize>,
    /// Absolute tolerance of the chord quadrature [default: 1e-8, orbit commands 1e-6]
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Objective evaluations for the one-waypoint path, 0 disables it [default: 24, orbit commands 0]
    #[arg(long)]
    pub waypoint_evals: Option<usize>,
    /// Cached boundary points per real dimension [default: 64]
    #[arg(long)]
    pub boundary_samples: Option<usize>,
    /// Simplex evaluations polishing the slice disk [default: 120, orbit commands 0]
    #[arg(long)]
    pub slice_polish: Option<usize>,
    /// Skip the chord integral unless the slice disk fails
    #[arg(long)]
    pub no_chord: bool,
    /// Skip projection-disk lower bounds
    #[arg(long)]
    pub no_projections: bool,
    /// Skip pair-specific extra hyperplanes
    #[arg(long)]
    pub no_augment: bool,
}

impl BracketFlags {
    pub fn apply(&self, mut o: BracketOptions, seed: u64) -> BracketOptions {
        o.seed = seed;
        if let Some(v) = self.hyperplanes {
            o.hyperplane_samples = v;
        }
        if let Some(v) = self.quad_tol {
            o.quad_tol = v;
        }
        if let Some(v) = self.waypoint_evals {
            o.waypoint_evals = v;
        }
        if let Some(v) = self.boundary_samples {
            o.boundary_samples = v;
        }
        if let Some(v) = self.slice_polish {
            o.slice_polish = v;
        }
        o.chord &= !self.no_chord;
        o.projections &= !self.no_projections;
        o.augment &= !self.no_augment;
        o
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.hyperplanes == Some(0) {
            return Err(Failure::Validation("--hyperplanes must be positive".into()));
        }
        if self.quad_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Failure::Validation("--quad-tol must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a command needs besides its parameters.
pub struct Setup<'a> {
    pub spec: &'a DomainSpec,
    pub model: ModelDomain,
    pub domain: ConvexDomain,
    pub seed: Option<u64>,
    pub flags: &'a BracketFlags,
    pub plot: bool,
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub boundary_tol: f64,
    pub gradient_floor: f64,
    /// Allowed excess of a lower end over its upper end before exit status 3.
    pub inconsistency_slack: f64,
    pub bracket: Option<BracketOptions>,
}

pub const INCONSISTENCY_SLACK: f64 = 1e-9;

pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    /// Brackets to check for `lower <= upper`, with a row label.
    pub brackets: Vec<(String, f64, f64)>,
    pub plot: Option<Plot>,
    pub bracket_options: Option<BracketOptions>,
}

impl Outcome {
    fn new(table: Table, summary: Value) -> Self {
        Self { table, summary, brackets: Vec::new(), plot: None, bracket_options: None }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            boundary_tol: BOUNDARY_TOL,
            gradient_floor: GRADIENT_FLOOR,
            inconsistency_slack: INCONSISTENCY_SLACK,
            bracket: self.bracket_options.clone(),
        }
    }

    /// Rows whose lower end exceeds the upper end.
    pub fn inconsistencies(&self) -> Vec<String> {
        self.brackets
            .iter()
            .filter(|(_, lo, up)| lo.is_nan() || up.is_nan() || *lo > *up + INCONSISTENCY_SLACK)
            .map(|(label, lo, up)| format!("{label}: lower {lo} exceeds upper {up}"))
            .collect()
    }
}

impl Setup<'_> {
    fn seed(&self) -> Result<u64, Failure> {
        self.seed.ok_or_else(|| Failure::Validation("this command needs a seed (config \"seed\" or --seed)".into()))
    }

    fn estimator(&self, base: BracketOptions) -> Result<DistanceEstimator, Failure> {
        Ok(DistanceEstimator::with_options(self.domain.clone(), self.flags.apply(base, self.seed()?))?)
    }

    fn orbit_estimator(&self) -> Result<DistanceEstimator, Failure> {
        let base = orbit_estimator(&self.domain)?.options().clone();
        self.estimator(base)
    }

    fn point(&self, p: &JsonPoint) -> Result<CVector, Failure> {
        p.to_cvector(self.domain.dim())
    }

    fn interior(&self, p: Option<&JsonPoint>) -> Result<CVector, Failure> {
        let z = match p {
            Some(p) => self.point(p)?,
            None => self.domain.center().clone(),
        };
        self.domain.require_interior(&z)?;
        Ok(z)
    }

    /// Seeded interior points at most `frac` of the way from the centre to the boundary.
    fn sample(&self, n: usize, frac: f64) -> Result<Vec<CVector>, Failure> {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Failure::Validation(format!("max_fraction must lie in (0, 1), got {frac}")));
        }
        let mut g = rng(self.seed()?);
        let c = self.domain.center().clone();
        (0..n)
            .map(|_| {
                let z = self.domain.sample_interior(&mut g)?;
                Ok(c.axpy(frac, &(&z - &c)))
            })
            .collect()
    }

    fn pairs(&self, explicit: &Option<Vec<[JsonPoint; 2]>>, n: usize, frac: f64) -> Result<Vec<(CVector, CVector)>, Failure> {
        let pairs = match explicit {
            Some(list) => list.iter().map(|[p, q]| Ok((self.point(p)?, self.point(q)?))).collect::<Result<Vec<_>, Failure>>()?,
            None => {
                let pts = self.sample(2 * n, frac)?;
                pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
            }
        };
        if pairs.is_empty() {
            return Err(Failure::Validation("no pairs to evaluate".into()));
        }
        for (p, q) in &pairs {
            self.domain.require_interior(p)?;
            self.domain.require_interior(q)?;
        }
        Ok(pairs)
    }

    /// Boundary of the slice through the centre spanned by coordinate `c`.
    fn slice_outline(&self, c: usize) -> Result<Series, Failure> {
        let center = self.domain.center();
        let mut points = Vec::with_capacity(129);
        for k in 0..=128 {
            let u = CVector::basis(self.domain.dim(), c).scale_c(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 128.0));
            let x = center.axpy(self.domain.ray_exit(center, &u)?, &u);
            points.push((x[c].re, x[c].im));
        }
        Ok(Series { label: format!("boundary of the z{c} slice"), points, mark: Mark::Line, colour: "#888888" })
    }

    fn coordinate(&self, c: usize) -> Result<usize, Failure> {
        if c >= self.domain.dim() {
            return Err(Failure::Validation(format!("plot_coordinate {c} exceeds dimension {}", self.domain.dim())));
        }
        Ok(c)
    }
}

fn interval_cells(iv: &DistanceInterval) -> Vec<String> {
    vec![num(iv.lower), num(iv.upper), num(iv.width()), iv.lower_witness.kind().into(), iv.upper_witness.kind().into()]
}

const INTERVAL_COLUMNS: [&str; 5] = ["lower", "upper", "width", "lower_witness", "upper_witness"];

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Closed-form distance on a centred ball of radius `radius`.
fn ball_distance(radius: f64, p: &CVector, q: &CVector) -> f64 {
    let (a, z) = (p.scale(1.0 / radius), q.scale(1.0 / radius));
    let one_minus = (1.0 - a.norm_sqr()) * (1.0 - z.norm_sqr()) / (Complex64::new(1.0, 0.0) - z.dot(&a)).norm_sqr();
    (1.0 - one_minus).max(0.0).sqrt().atanh()
}

pub fn run(setup: &Setup<'_>, params: &Params) -> Result<Outcome, Failure> {
    setup.flags.validate()?;
    match params {
        Params::Distance(p) => distance(setup, p),
        Params::Gromov(p) => gromov(setup, p),
        Params::Dichotomy(p) => dichotomy(setup, p),
        Params::Delta4(p) => delta4(setup, p),
        Params::Wolff(p) => wolff(setup, p),
        Params::Classify(p) => classify_cmd(setup, p),
        Params::Search(p) => search(setup, p),
        Params::Translate(p) => translate(setup, p),
        Params::Linetype(p) => linetype(setup, p),
        Params::Scaling(p) => scaling(setup, p),
    }
}

fn distance(setup: &Setup<'_>, p: &DistanceParams) -> Result<Outcome, Failure> {
    let est = setup.estimator(BracketOptions::default())?;
    let pairs = setup.pairs(&p.points, p.pairs, p.max_fraction)?;
    let d = setup.domain.dim();
    let exact_radius = match setup.model {
        ModelDomain::Ball(_) => Some(setup.spec.radius.unwrap_or(1.0)),
        _ => None,
    };
    let mut header = vec!["index".to_string()];
    header.extend(point_header("p", d));
    header.extend(point_header("q", d));
    header.extend(INTERVAL_COLUMNS.map(String::from));
    header.extend(["exact".into(), "contains_exact".into()]);
    let mut table = Table::new(header);
    let mut out_brackets = Vec::new();
    let (mut widths, mut contained) = (Vec::new(), 0usize);
    for (k, ((pp, qq), iv)) in pairs.iter().zip(est.intervals(&pairs)).enumerate() {
        let iv = iv?;
        let mut row = vec![k.to_string()];
        row.extend(point_cells(pp));
        row.extend(point_cells(qq));
        row.extend(interval_cells(&iv));
        match exact_radius {
            Some(r) => {
                let exact = ball_distance(r, pp, qq);
                let inside = iv.contains(exact, 1e-9);
                contained += inside as usize;
                row.extend([num(exact), inside.to_string()]);
            }
            None => row.extend([String::new(), String::new()]),
        }
        table.push(row);
        widths.push(iv.width());
        out_brackets.push((format!("pair {k}"), iv.lower, iv.upper));
    }
    widths.sort_by(f64::total_cmp);
    let summary = json!({
        "pairs": pairs.len(),
        "median_width": widths[widths.len() / 2],
        "max_width": widths.last(),
        "closed_form": exact_radius.map(|_| "ball"),
        "contained_closed_form": exact_radius.map(|_| contained),
    });
    let mut out = Outcome::new(table, summary);
    out.brackets = out_brackets;
    out.bracket_options = Some(est.options().clone());
    Ok(out)
}

fn gromov(setup: &Setup<'_>, p: &GromovParams) -> Result<Outcome, Failure> {
    let est = setup.estimator(BracketOptions::default())?;
    let dom = &setup.domain;
    let d = dom.dim();
    match p {
        GromovParams::Products { triples, max_fraction, base, points } => {
            let o = setup.interior(base.as_ref())?;
            let pairs = setup.pairs(points, *triples, *max_fraction)?;
            let mut header = vec!["index".to_string()];
            header.extend(point_header("p", d));
            header.extend(point_header("q", d));
            header.extend(["lower".into(), "upper".into()]);
            let mut table = Table::new(header);
            let mut brackets = Vec::new();
            let ivs: Vec<_> = {
                use rayon::prelude::*;
                pairs.par_iter().map(|(a, b)| est.gromov_product(&o, a, b)).collect()
            };
            for (k, ((a, b), iv)) in pairs.iter().zip(ivs).enumerate() {
                let iv = iv?;
                let mut row = vec![k.to_string()];
                row.extend(point_cells(a));
                row.extend(point_cells(b));
                row.extend([num(iv.lower), num(iv.upper)]);
                table.push(row);
                brackets.push((format!("triple {k}"), iv.lower, iv.upper));
            }
            let max_width = brackets.iter().map(|(_, l, u)| u - l).fold(0.0, f64::max);
            let mut out = Outcome::new(table, json!({ "mode": "products", "base": o, "count": pairs.len(), "max_width": max_width }));
            out.brackets = brackets;
            out.bracket_options = Some(est.options().clone());
            Ok(out)
        }
        GromovParams::NormalCurve { x, eps, t_max, grid, a, b } => {
            if !(*t_max > 0.0) || *grid < 2 {
                return Err(Failure::Validation("normal_curve needs t_max > 0 and at least 2 grid points".into()));
            }
            let bp = boundary_data(dom, &setup.point(x)?)?;
            let eps = eps.unwrap_or_else(|| normal_eps(dom, &bp));
            let curve = normal_curve(dom, &bp, eps, *t_max)?;
            let cert = certify_quasi_geodesic(&est, &curve, *a, *b, &linspace(0.0, *t_max, *grid))?;
            let mut table = Table::new(["s", "t", "lower", "upper", "pass"]);
            let mut brackets = Vec::new();
            for s in &cert.samples {
                table.push(vec![num(s.s), num(s.t), num(s.lower), num(s.upper), s.pass.to_string()]);
                brackets.push((format!("s={} t={}", s.s, s.t), s.lower, s.upper));
            }
            let summary = json!({
                "mode": "normal_curve",
                "point": bp.point,
                "eps": eps,
                "a": cert.a,
                "b": cert.b,
                "passed": cert.passed,
                "failures": cert.failures(),
                "tight_b": cert.tight_b,
                "tight_b_unit": cert.tight_b_unit,
                "tight_a": cert.tight_a,
                "k_almost": cert.k_almost,
            });
            let mut out = Outcome::new(table, summary);
            out.brackets = brackets;
            out.bracket_options = Some(est.options().clone());
            if setup.plot {
                let c = 0;
                let pts = linspace(0.0, *t_max, 200).into_iter().map(|t| curve.at(t)).map(|z| (z[c].re, z[c].im)).collect();
                out.plot = Some(Plot {
                    title: "normal curve".into(),
                    series: vec![
                        setup.slice_outline(c)?,
                        Series { label: "normal curve".into(), points: pts, mark: Mark::Line, colour: "#1f5fbf" },
                    ],
                });
            }
            Ok(out)
        }
    }
}

fn dichotomy(setup: &Setup<'_>, p: &DichotomyParams) -> Result<Outcome, Failure> {
    let est = setup.estimator(BracketOptions::default())?;
    let dom = &setup.domain;
    let x = boundary_data(dom, &setup.point(&p.x)?)?;
    let y = boundary_data(dom, &setup.point(&p.y)?)?;
    let o = setup.interior(p.base.as_ref())?;
    let plan = match p.plan {
        PlanName::Grid => DichotomyPlan::Grid,
        PlanName::Diagonal => DichotomyPlan::Diagonal,
    };
    let rep = product_dichotomy_experiment(&est, &x, &y, &o, p.levels, plan)?;
    let mut table = Table::new(["n", "m", "lower", "upper"]);
    let mut brackets = Vec::new();
    for s in &rep.samples {
        table.push(vec![s.n.to_string(), s.m.to_string(), num(s.lower), num(s.upper)]);
        brackets.push((format!("level ({}, {})", s.n, s.m), s.lower, s.upper));
    }
    let visibility = if p.visibility { Some(visibility_probe(&est, &x, &y, p.levels)?) } else { None };
    let summary = json!({
        "same_tangent": rep.same_tangent,
        "divergence_level": rep.divergence_level,
        "max_upper": rep.max_upper,
        "base": o,
        "visibility": visibility.as_ref().map(|v| json!({ "min_depth": v.min_depth(), "levels": v.levels })),
    });
    let mut out = Outcome::new(table, summary);
    out.brackets = brackets;
    out.bracket_options = Some(est.options().clone());
    Ok(out)
}

fn delta4(setup: &Setup<'_>, p: &Delta4Params) -> Result<Outcome, Failure> {
    let est = setup.estimator(BracketOptions::default())?;
    let points = match &p.explicit {
        Some(list) => list.iter().map(|z| setup.interior(Some(z))).collect::<Result<Vec<_>, _>>()?,
        None => setup.sample(p.points, p.max_fraction)?,
    };
    let report = four_point_delta(&est, &points)?;
    let mut index = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            index.push((i, j));
            pairs.push((points[i].clone(), points[j].clone()));
        }
    }
    let mut table = Table::new(["i", "j", "lower", "upper"]);
    let mut brackets = Vec::new();
    for ((i, j), iv) in index.into_iter().zip(est.intervals(&pairs)) {
        let iv = iv?;
        table.push(vec![i.to_string(), j.to_string(), num(iv.lower), num(iv.upper)]);
        brackets.push((format!("pair ({i}, {j})"), iv.lower, iv.upper));
    }
    let summary = json!({
        "delta": report.delta,
        "slack": report.slack,
        "quadruple": report.quadruple,
        "points": points,
    });
    let mut out = Outcome::new(table, summary);
    out.brackets = brackets;
    out.bracket_options = Some(est.options().clone());
    Ok(out)
}

fn wolff_options(o: &OrbitSettings) -> Result<ClassifyOptions, Failure> {
    if o.steps == 0 || !(o.tol > 0.0) || !(o.m_cap > 0.0) || !(o.face_tol > 0.0) {
        return Err(Failure::Validation("orbit settings need steps > 0 and positive tol, m_cap, face_tol".into()));
    }
    Ok(ClassifyOptions { wolff: WolffOptions { steps: o.steps, tol: o.tol, m_cap: o.m_cap }, face_tol: o.face_tol })
}

fn orbit_rows(table: &mut Table, brackets: &mut Vec<(String, f64, f64)>, label: &str, rep: &WolffReport) {
    let orbit = &rep.orbit;
    for (k, z) in orbit.points.iter().enumerate() {
        let iv = &orbit.kobayashi_from_base[k];
        let mut row = vec![label.to_string(), k.to_string()];
        row.extend(point_cells(z));
        row.extend([num(iv.lower), num(iv.upper), num(orbit.boundary_distances[k]), num(rep.face_distances[k])]);
        table.push(row);
        brackets.push((format!("{label} step {k}"), iv.lower, iv.upper));
    }
}

fn orbit_header(d: usize) -> Vec<String> {
    let mut header = vec!["direction".to_string(), "k".to_string()];
    header.extend(point_header("z", d));
    header.extend(["lower".into(), "upper".into(), "boundary_distance".into(), "face_distance".into()]);
    header
}

fn orbit_series(rep: &WolffReport, c: usize, label: &str, colour: &'static str) -> Series {
    Series { label: label.into(), points: rep.orbit.points.iter().map(|z| (z[c].re, z[c].im)).collect(), mark: Mark::Dots, colour }
}

fn limit_json(rep: &WolffReport) -> Value {
    json!(rep.limit.as_ref().map(|l| json!({ "point": l.point, "tangent": l.tangent })))
}

fn wolff(setup: &Setup<'_>, p: &WolffParams) -> Result<Outcome, Failure> {
    let est = setup.orbit_estimator()?;
    let phi = p.map.build(setup.spec, &setup.model)?;
    let start = setup.interior(p.start.as_ref())?;
    let opts = wolff_options(&p.orbit)?;
    let c = setup.coordinate(p.plot_coordinate)?;
    let rep = wolff_denjoy(&est, |z| phi.apply(z), &start, opts.wolff)?;
    let mut table = Table::new(orbit_header(setup.domain.dim()));
    let mut brackets = Vec::new();
    orbit_rows(&mut table, &mut brackets, "forward", &rep);
    let summary = json!({
        "map": phi.label,
        "verdict": rep.verdict,
        "converged": rep.converged,
        "max_lower": rep.max_lower,
        "steps": rep.orbit.points.len() - 1,
        "stopped_early": rep.orbit.stopped_early,
        "limit": limit_json(&rep),
        "final_face_distance": rep.face_distances.last(),
    });
    let mut out = Outcome::new(table, summary);
    out.brackets = brackets;
    out.bracket_options = Some(est.options().clone());
    if setup.plot {
        out.plot = Some(Plot {
            title: format!("orbit of {}", phi.label),
            series: vec![setup.slice_outline(c)?, orbit_series(&rep, c, "orbit", "#1f5fbf")],
        });
    }
    Ok(out)
}

fn classify_cmd(setup: &Setup<'_>, p: &ClassifyParams) -> Result<Outcome, Failure> {
    let est = setup.orbit_estimator()?;
    let phi = p.map.build(setup.spec, &setup.model)?;
    let start = setup.interior(p.start.as_ref())?;
    let opts = wolff_options(&p.orbit)?;
    let c = setup.coordinate(p.plot_coordinate)?;
    let (class, fwd, bwd) = classify_with_orbits(&est, &phi, &start, opts)?;
    let mut table = Table::new(orbit_header(setup.domain.dim()));
    let mut brackets = Vec::new();
    orbit_rows(&mut table, &mut brackets, "forward", &fwd);
    orbit_rows(&mut table, &mut brackets, "backward", &bwd);
    let distinct_faces = match (&fwd.limit, &bwd.limit) {
        (Some(a), Some(b)) => Some(!same_complex_tangent(a, b, opts.face_tol)),
        _ => None,
    };
    let summary = json!({
        "map": phi.label,
        "verdict": class.verdict,
        "attracting": class.attracting,
        "repelling": class.repelling,
        "attracting_point": class.attracting_point,
        "repelling_point": class.repelling_point,
        "distinct_faces": distinct_faces,
        "forward": class.forward,
        "backward": class.backward,
    });
    let mut out = Outcome::new(table, summary);
    out.brackets = brackets;
    out.bracket_options = Some(est.options().clone());
    if setup.plot {
        out.plot = Some(Plot {
            title: format!("orbits of {}", phi.label),
            series: vec![
                setup.slice_outline(c)?,
                orbit_series(&fwd, c, "forward orbit", "#1f5fbf"),
                orbit_series(&bwd, c, "backward orbit", "#c0392b"),
            ],
        });
    }
    Ok(out)
}

fn search(setup: &Setup<'_>, p: &SearchParams) -> Result<Outcome, Failure> {
    let est = setup.orbit_estimator()?;
    let autos = p.maps.iter().map(|m| m.build(setup.spec, &setup.model)).collect::<Result<Vec<_>, _>>()?;
    let start = setup.interior(p.start.as_ref())?;
    let opts = wolff_options(&p.orbit)?;
    if p.budget == 0 {
        return Err(Failure::Validation("budget must be at least 1".into()));
    }
    let rep = hyperbolic_search(&est, &autos, &start, p.budget, opts)?;
    let mut table = Table::new(["index", "word", "verdict"]);
    for (k, (word, verdict)) in rep.tried.iter().enumerate() {
        let v = serde_json::to_value(verdict)?;
        table.push(vec![k.to_string(), word.clone(), v.as_str().unwrap_or_default().to_string()]);
    }
    let summary = json!({
        "found": rep.found_label(),
        "classification": rep.found.as_ref().map(|(_, c)| c),
        "tried": rep.tried.len(),
    });
    let mut out = Outcome::new(table, summary);
    out.bracket_options = Some(est.options().clone());
    Ok(out)
}

fn translate(setup: &Setup<'_>, p: &TranslateParams) -> Result<Outcome, Failure> {
    let dom = &setup.domain;
    let phi = p.map.build(setup.spec, &setup.model)?;
    let o = setup.interior(p.base.as_ref())?;
    if !(p.t_max > 0.0) || p.t_count == 0 {
        return Err(Failure::Validation("translate needs t_max > 0 and t_count > 0".into()));
    }
    let (forward, backward) = match (&p.forward, &p.backward) {
        (Some(f), Some(b)) => (setup.point(f)?, setup.point(b)?),
        (None, None) => {
            let class = classify(&setup.orbit_estimator()?, &phi, &o, wolff_options(&p.orbit)?)?;
            match (class.attracting_point, class.repelling_point) {
                (Some(f), Some(b)) if f.distance(&b) > 1e-3 => (f, b),
                _ => {
                    return Err(Failure::Validation(format!(
                        "map is {:?}, not hyperbolic; give forward and backward points",
                        class.verdict
                    )))
                }
            }
        }
        _ => return Err(Failure::Validation("give both forward and backward points or neither".into())),
    };
    let (fb, bb) = (boundary_data(dom, &forward)?, boundary_data(dom, &backward)?);
    let eps = p.eps.unwrap_or_else(|| normal_eps(dom, &fb).min(normal_eps(dom, &bb)));
    let sigma = concatenated_normal_curve(dom, &fb, &bb, eps, p.t_max)?;
    let est = setup.estimator(BracketOptions::default())?;
    let grid = linspace(-p.t_max, p.t_max, p.t_count);
    let rep = translation_check(&est, &phi, &sigma, &o, &grid, p.k_max)?;
    let d = dom.dim();
    let mut header = vec!["t".to_string()];
    header.extend(point_header("sigma", d));
    header.extend(["best_k".into(), "upper".into()]);
    let mut table = Table::new(header);
    for s in &rep.samples {
        let mut row = vec![num(s.t)];
        row.extend(point_cells(&sigma.at(s.t)));
        row.extend([s.best_k.to_string(), num(s.upper)]);
        table.push(row);
    }
    let summary = json!({
        "map": phi.label,
        "forward": forward,
        "backward": backward,
        "eps": eps,
        "k_max": p.k_max,
        "sup_min_upper": rep.sup_min_upper,
        "finite": rep.sup_min_upper.is_finite(),
        "k_range": [rep.k_range.0, rep.k_range.1],
    });
    let mut out = Outcome::new(table, summary);
    out.bracket_options = Some(est.options().clone());
    if setup.plot {
        let c = setup.coordinate(p.plot_coordinate)?;
        let curve = linspace(-p.t_max, p.t_max, 200).into_iter().map(|t| sigma.at(t)).map(|z| (z[c].re, z[c].im)).collect();
        let (lo, hi) = rep.k_range;
        let orbit = (lo..=hi)
            .map(|k| phi.power_apply(k, &o))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|z| (z[c].re, z[c].im))
            .collect();
        out.plot = Some(Plot {
            title: format!("shadowing by {}", phi.label),
            series: vec![
                setup.slice_outline(c)?,
                Series { label: "glued normal curve".into(), points: curve, mark: Mark::Line, colour: "#1f5fbf" },
                Series { label: "orbit".into(), points: orbit, mark: Mark::Dots, colour: "#c0392b" },
            ],
        });
    }
    Ok(out)
}

/// The oracle line types are computed against, and whether points are Siegel coordinates.
fn typing_oracle(setup: &Setup<'_>) -> (std::sync::Arc<dyn DefiningFunction>, Option<SiegelDomain>) {
    match &setup.model {
        ModelDomain::Siegel(s) => (s.oracle(), Some(s.clone())),
        _ => (setup.domain.oracle().clone(), None),
    }
}

fn linetype(setup: &Setup<'_>, p: &LinetypeParams) -> Result<Outcome, Failure> {
    let (oracle, siegel) = typing_oracle(setup);
    let d = oracle.dim();
    let mut points = p.points.iter().map(|z| z.to_cvector(d)).collect::<Result<Vec<_>, _>>()?;
    if p.sample > 0 {
        let seed = setup.seed()?;
        match &siegel {
            Some(s) => {
                // boundary points (x + i p(z), z) of the unbounded model
                for dir in sphere_directions(2 * d, p.sample, seed) {
                    let z: Vec<Complex64> = (1..d).map(|j| Complex64::new(dir[2 * j], dir[2 * j + 1])).collect();
                    let w = Complex64::new(dir[0], s.poly().eval(&z));
                    points.push(CVector::new(std::iter::once(w).chain(z)));
                }
            }
            None => {
                for dir in sphere_directions(2 * d, p.sample, seed) {
                    points.push(setup.domain.boundary_point_towards(&CVector::from_real(&dir))?);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Failure::Validation("linetype needs points or a positive sample count".into()));
    }
    if p.cap < 2 {
        return Err(Failure::Validation("cap must be at least 2".into()));
    }
    let results = {
        use rayon::prelude::*;
        points.par_iter().map(|x| oracle_line_type(oracle.as_ref(), x, p.cap)).collect::<Result<Vec<_>, _>>()?
    };
    let mut header = vec!["index".to_string()];
    header.extend(point_header("x", d));
    header.extend(["type".into(), "method".into(), "directions_tried".into()]);
    header.extend(point_header("direction", d));
    let mut table = Table::new(header);
    for (k, r) in results.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(point_cells(&r.point.point));
        let method = serde_json::to_value(r.method)?;
        row.extend([r.type_value.to_string(), method.as_str().unwrap_or_default().into(), r.directions_tried.to_string()]);
        row.extend(point_cells(&r.direction));
        table.push(row);
    }
    let max_type = results.iter().map(|r| r.type_value).max();
    let summary = json!({
        "coordinates": if siegel.is_some() { "siegel" } else { "bounded" },
        "cap": p.cap,
        "max_type": max_type,
        "all_finite": results.iter().all(|r| r.type_value != TypeValue::Infinite),
        "results": results,
    });
    Ok(Outcome::new(table, summary))
}

fn scaling(setup: &Setup<'_>, p: &ScalingParams) -> Result<Outcome, Failure> {
    let d = setup.domain.dim();
    let (oracle, model, default_x): (std::sync::Arc<dyn DefiningFunction>, SiegelDomain, CVector) = match &setup.model {
        ModelDomain::Ellipsoid(e) => (setup.domain.oracle().clone(), SiegelDomain::new(e.poly().clone())?, CVector::basis(d, 0)),
        ModelDomain::Siegel(s) => (s.oracle(), s.clone(), CVector::zeros(d)),
        ModelDomain::Ball(b) => {
            if setup.spec.radius.unwrap_or(1.0) != 1.0 || d < 2 {
                return Err(Failure::Validation("scaling on a ball needs the unit ball in dimension >= 2".into()));
            }
            let poly = WeightedPolynomial::sum_of_powers(&vec![1; d - 1])?;
            (b.oracle().clone(), SiegelDomain::new(poly)?, CVector::basis(d, 0))
        }
        ModelDomain::FlatFace(_) => {
            return Err(Failure::Validation("flat_face domains have no homogeneous model to rescale towards".into()))
        }
    };
    let x = match &p.x {
        Some(x) => x.to_cvector(d)?,
        None => default_x,
    };
    let deltas = p.deltas.clone().unwrap_or_else(|| model.poly().deltas());
    if p.times.is_empty() || !(p.radius > 0.0) || p.directions == 0 {
        return Err(Failure::Validation("scaling needs times, a positive radius and directions".into()));
    }
    let seq = frankel_scaling(oracle, &x, &deltas, &p.times)?;
    let diags = scaling_diagnostics(&seq, model.oracle().as_ref(), p.radius, p.directions)?;
    let mut table = Table::new(["n", "t_n", "hausdorff"]);
    for g in &diags {
        table.push(vec![g.n.to_string(), num(g.t), num(g.hausdorff)]);
    }
    let monotone = diags.windows(2).all(|w| w[1].hausdorff <= w[0].hausdorff);
    let summary = json!({
        "base_point": seq.base_point.point,
        "deltas": seq.deltas,
        "maps": seq.maps,
        "radius": p.radius,
        "monotone_decreasing": monotone,
        "final_hausdorff": diags.last().map(|g| g.hausdorff),
    });
    Ok(Outcome::new(table, summary))
}
