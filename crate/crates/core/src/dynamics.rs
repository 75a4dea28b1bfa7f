//! Automorphisms of model domains, orbit iteration and the elliptic / parabolic /
//! hyperbolic classification.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::{
    boundary_data_unchecked, boundary_distance, nearest_boundary_point, BoundaryPoint, CVector, ComplexHyperplane,
    ConvexDomain, BOUNDARY_TOL,
};
use crate::gromov::ParamCurve;
use crate::kobayashi::{BracketOptions, DistanceEstimator, DistanceInterval};
use crate::models::SiegelDomain;
use crate::numeric::rng;
use crate::{Error, Result};

/// Orbits stop once they come this close (Euclidean) to the boundary.
pub const ORBIT_FLOOR: f64 = 1e-9;

type Map = Arc<dyn Fn(&CVector) -> Result<CVector> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AutomorphismKind {
    BallMobius,
    BallUnitary,
    SiegelTranslation,
    SiegelDilation,
    SiegelUnitary,
    Conjugated,
    Composite,
    Custom,
}

/// Invertible holomorphic self-map with exact forward and inverse evaluation.
#[derive(Clone)]
pub struct Automorphism {
    forward: Map,
    backward: Map,
    pub kind: AutomorphismKind,
    pub label: String,
}

impl fmt::Debug for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Automorphism").field("kind", &self.kind).field("label", &self.label).finish()
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn require_dim(z: &CVector, d: usize) -> Result<()> {
    if z.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: z.dim() });
    }
    Ok(())
}

impl Automorphism {
    pub fn new<F, G>(kind: AutomorphismKind, label: impl Into<String>, forward: F, inverse: G) -> Self
    where
        F: Fn(&CVector) -> Result<CVector> + Send + Sync + 'static,
        G: Fn(&CVector) -> Result<CVector> + Send + Sync + 'static,
    {
        Self { forward: Arc::new(forward), backward: Arc::new(inverse), kind, label: label.into() }
    }

    pub fn apply(&self, z: &CVector) -> Result<CVector> {
        (self.forward)(z)
    }

    pub fn apply_inverse(&self, z: &CVector) -> Result<CVector> {
        (self.backward)(z)
    }

    pub fn inverse(&self) -> Automorphism {
        Self {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            kind: self.kind,
            label: format!("({})^-1", self.label),
        }
    }

    /// `self o other`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        let (f, g) = (self.forward.clone(), other.forward.clone());
        let (fi, gi) = (self.backward.clone(), other.backward.clone());
        Self {
            forward: Arc::new(move |z| f(&g(z)?)),
            backward: Arc::new(move |z| gi(&fi(z)?)),
            kind: AutomorphismKind::Composite,
            label: format!("{} o {}", self.label, other.label),
        }
    }

    /// `phi^k`, negative `k` meaning the inverse.
    pub fn power_apply(&self, k: i64, z: &CVector) -> Result<CVector> {
        let mut out = z.clone();
        for _ in 0..k.unsigned_abs() {
            out = if k >= 0 { self.apply(&out)? } else { self.apply_inverse(&out)? };
        }
        Ok(out)
    }

    /// Unit-disk Möbius map `z -> (z + a) / (1 + conj(a) z)`.
    pub fn disk_mobius(a: Complex64) -> Result<Self> {
        Self::ball_mobius(1, a)
    }

    /// Ball automorphism moving `0` to `(a, 0, ..., 0)`:
    /// `z -> ((z_1 + a) / (1 + conj(a) z_1), sqrt(1 - |a|^2) z_j / (1 + conj(a) z_1))`.
    pub fn ball_mobius(d: usize, a: Complex64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!("Möbius parameter must lie in the disk, got {a}")));
        }
        let map = move |a: Complex64| {
            move |z: &CVector| -> Result<CVector> {
                require_dim(z, d)?;
                let den = one() + a.conj() * z[0];
                let s = (1.0 - a.norm_sqr()).sqrt();
                let mut out = z.clone();
                out[0] = (z[0] + a) / den;
                for j in 1..d {
                    out[j] = s * z[j] / den;
                }
                Ok(out)
            }
        };
        Ok(Self::new(AutomorphismKind::BallMobius, format!("mobius({a})"), map(a), map(-a)))
    }

    /// `z -> diag(e^{i theta_j}) z`.
    pub fn ball_unitary(phases: &[f64]) -> Self {
        let d = phases.len();
        let rot = |sign: f64, phases: Vec<f64>| {
            move |z: &CVector| -> Result<CVector> {
                require_dim(z, d)?;
                Ok(z.iter().zip(&phases).map(|(w, &t)| w * Complex64::from_polar(1.0, sign * t)).collect())
            }
        };
        Self::new(
            AutomorphismKind::BallUnitary,
            format!("rotation{phases:?}"),
            rot(1.0, phases.to_vec()),
            rot(-1.0, phases.to_vec()),
        )
    }

    /// Real translation `(w, z) -> (w + s, z)` of a Siegel domain.
    pub fn siegel_translation(dim: usize, s: f64) -> Self {
        let shift = move |s: f64| {
            move |q: &CVector| -> Result<CVector> {
                require_dim(q, dim)?;
                let mut out = q.clone();
                out[0] += s;
                Ok(out)
            }
        };
        Self::new(AutomorphismKind::SiegelTranslation, format!("translation({s})"), shift(s), shift(-s))
    }

    /// Dilation `(w, z) -> (t^2 w, t^{2 delta_j} z_j)` with `delta_j = 1/(2 m_j)`.
    pub fn siegel_dilation(weights: &[u32], t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {t}")));
        }
        let dim = weights.len() + 1;
        let scale = |t: f64, weights: Vec<u32>| {
            move |q: &CVector| -> Result<CVector> {
                require_dim(q, dim)?;
                let mut out = q.clone();
                out[0] = q[0] * (t * t);
                for (j, &m) in weights.iter().enumerate() {
                    out[j + 1] = q[j + 1] * t.powf(1.0 / m as f64);
                }
                Ok(out)
            }
        };
        Ok(Self::new(
            AutomorphismKind::SiegelDilation,
            format!("dilation({t})"),
            scale(t, weights.to_vec()),
            scale(1.0 / t, weights.to_vec()),
        ))
    }

    /// Weighted rotation `(w, z) -> (w, e^{i theta / m_j} z_j)`; balanced polynomials are invariant.
    pub fn siegel_unitary(weights: &[u32], theta: f64) -> Self {
        let dim = weights.len() + 1;
        let rot = |theta: f64, weights: Vec<u32>| {
            move |q: &CVector| -> Result<CVector> {
                require_dim(q, dim)?;
                let mut out = q.clone();
                for (j, &m) in weights.iter().enumerate() {
                    out[j + 1] = q[j + 1] * Complex64::from_polar(1.0, theta / m as f64);
                }
                Ok(out)
            }
        };
        Self::new(
            AutomorphismKind::SiegelUnitary,
            format!("weighted rotation({theta})"),
            rot(theta, weights.to_vec()),
            rot(-theta, weights.to_vec()),
        )
    }

    /// `F o phi o F^{-1}` on the polynomial ellipsoid, `F` the Cayley map of `siegel`.
    pub fn conjugate_by_cayley(&self, siegel: &SiegelDomain) -> Automorphism {
        let (s1, s2) = (siegel.clone(), siegel.clone());
        let (f, b) = (self.forward.clone(), self.backward.clone());
        Self {
            forward: Arc::new(move |e| s1.cayley_map(&f(&s1.cayley_inverse(e)?)?)),
            backward: Arc::new(move |e| s2.cayley_map(&b(&s2.cayley_inverse(e)?)?)),
            kind: AutomorphismKind::Conjugated,
            label: format!("cayley({})", self.label),
        }
    }

    /// Round-trip error and interior preservation on `n` seeded interior points.
    pub fn verify(&self, dom: &ConvexDomain, n: usize, seed: u64) -> Result<AutomorphismCheck> {
        let mut rng = rng(seed);
        let mut check = AutomorphismCheck { max_roundtrip: 0.0, maps_inside: true, samples: n };
        for _ in 0..n {
            let z = dom.sample_interior(&mut rng)?;
            let fz = self.apply(&z)?;
            check.maps_inside &= dom.contains(&fz);
            check.max_roundtrip = check.max_roundtrip.max(self.apply_inverse(&fz)?.distance(&z));
            check.max_roundtrip = check.max_roundtrip.max(self.apply(&self.apply_inverse(&z)?)?.distance(&z));
        }
        Ok(check)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AutomorphismCheck {
    pub max_roundtrip: f64,
    pub maps_inside: bool,
    pub samples: usize,
}

/// Cheap bracket settings for long orbits: shared hyperplanes below, the slice disk above.
pub fn orbit_estimator(dom: &ConvexDomain) -> Result<DistanceEstimator> {
    DistanceEstimator::with_options(
        dom.clone(),
        BracketOptions {
            hyperplane_samples: 32,
            chord: false,
            waypoint_evals: 0,
            augment: false,
            projections: false,
            slice_polish: 0,
            ..BracketOptions::fast()
        },
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub base: CVector,
    pub points: Vec<CVector>,
    pub kobayashi_from_base: Vec<DistanceInterval>,
    /// Euclidean boundary distance of each point (0 once the orbit reaches the boundary).
    pub boundary_distances: Vec<f64>,
    pub boundary_accumulation: Option<Vec<BoundaryPoint>>,
    /// Set when the orbit came within [`ORBIT_FLOOR`] of the boundary before `N` steps.
    pub stopped_early: bool,
}

/// Iterates `f` from `p` for up to `n` steps, bracketing `K(p, f^k(p))` at every step.
pub fn iterate_orbit<F>(est: &DistanceEstimator, f: F, p: &CVector, n: usize) -> Result<OrbitRecord>
where
    F: Fn(&CVector) -> Result<CVector>,
{
    let dom = est.domain();
    let delta0 = boundary_distance(dom, p)?;
    let mut rec = OrbitRecord {
        base: p.clone(),
        points: vec![p.clone()],
        kobayashi_from_base: vec![DistanceInterval::exact(0.0)],
        boundary_distances: vec![delta0],
        boundary_accumulation: None,
        stopped_early: false,
    };
    let mut z = p.clone();
    for step in 1..=n {
        z = f(&z)?;
        let r = dom.value(&z);
        if r > BOUNDARY_TOL || !z.is_finite() {
            return Err(Error::EscapeDetected { step, r });
        }
        if r >= 0.0 {
            // landed on the boundary within tolerance
            rec.stopped_early = true;
            break;
        }
        let delta = boundary_distance(dom, &z)?;
        rec.kobayashi_from_base.push(est.interval(p, &z)?);
        rec.boundary_distances.push(delta);
        rec.points.push(z.clone());
        if delta < ORBIT_FLOOR {
            rec.stopped_early = true;
            break;
        }
    }
    Ok(rec)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WolffOptions {
    pub steps: usize,
    /// Face distance below which convergence is declared.
    pub tol: f64,
    /// Kobayashi radius (natural-log units) of the ball a bounded orbit must stay in.
    pub m_cap: f64,
}

impl Default for WolffOptions {
    fn default() -> Self {
        Self { steps: 400, tol: 1e-6, m_cap: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WolffVerdict {
    BoundedOrbit,
    ConvergesToFace,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct WolffReport {
    pub verdict: WolffVerdict,
    /// Boundary point nearest the orbit tail and its complex tangent.
    pub limit: Option<BoundaryPoint>,
    /// `d_Euc(f^k(p), T)` for the limit tangent `T`.
    pub face_distances: Vec<f64>,
    /// Whether the last face distance is below `tol`.
    pub converged: bool,
    pub max_lower: f64,
    pub orbit: OrbitRecord,
}

impl WolffReport {
    pub fn tangent(&self) -> Option<&ComplexHyperplane> {
        self.limit.as_ref().map(|b| &b.tangent)
    }
}

/// Boundary distances shrink steadily over the second half of the orbit: five evenly
/// spaced checkpoints decrease strictly and the last is at most half the first.
fn escaping(deltas: &[f64]) -> bool {
    let n = deltas.len();
    if n < 8 {
        return false;
    }
    let checkpoints: Vec<f64> = (0..5).map(|k| deltas[n / 2 + k * (n - 1 - n / 2) / 4]).collect();
    checkpoints.windows(2).all(|w| w[1] < w[0]) && checkpoints[4] <= 0.5 * checkpoints[0]
}

fn tail_limit(dom: &ConvexDomain, rec: &OrbitRecord) -> Result<BoundaryPoint> {
    let tail = rec.points.last().expect("orbit holds its base");
    let x = if dom.contains(tail) { nearest_boundary_point(dom, tail)?.1 } else { tail.clone() };
    boundary_data_unchecked(dom, &x)
}

/// Iterates `f` and decides between a bounded orbit and convergence to a boundary face.
pub fn wolff_denjoy<F>(est: &DistanceEstimator, f: F, p: &CVector, opts: WolffOptions) -> Result<WolffReport>
where
    F: Fn(&CVector) -> Result<CVector>,
{
    let dom = est.domain();
    let orbit = iterate_orbit(est, f, p, opts.steps)?;
    let max_lower = orbit.kobayashi_from_base.iter().map(|iv| iv.lower).fold(0.0, f64::max);
    let limit = tail_limit(dom, &orbit)?;
    let face_distances: Vec<f64> = orbit.points.iter().map(|z| limit.tangent.distance(z)).collect();
    let converged = face_distances.last().is_some_and(|&d| d < opts.tol);
    let verdict = if converged || orbit.stopped_early || escaping(&orbit.boundary_distances) {
        WolffVerdict::ConvergesToFace
    } else if max_lower <= opts.m_cap {
        WolffVerdict::BoundedOrbit
    } else {
        WolffVerdict::Undetermined
    };
    let limit = (verdict == WolffVerdict::ConvergesToFace).then_some(limit);
    let mut orbit = orbit;
    if let Some(l) = &limit {
        orbit.boundary_accumulation = Some(vec![l.clone()]);
    }
    Ok(WolffReport { verdict, limit, face_distances, converged, max_lower, orbit })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Limit tangent of forward orbits, `H^+`.
    pub attracting: Option<ComplexHyperplane>,
    /// Limit tangent of backward orbits, `H^-`.
    pub repelling: Option<ComplexHyperplane>,
    pub attracting_point: Option<CVector>,
    pub repelling_point: Option<CVector>,
    pub forward: WolffVerdict,
    pub backward: WolffVerdict,
    pub forward_tail: CVector,
    pub backward_tail: CVector,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassifyOptions {
    pub wolff: WolffOptions,
    /// Tolerance for comparing the two limit tangents.
    pub face_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { wolff: WolffOptions::default(), face_tol: 0.1 }
    }
}

pub fn classify(est: &DistanceEstimator, phi: &Automorphism, p: &CVector, opts: ClassifyOptions) -> Result<Classification> {
    classify_with_orbits(est, phi, p, opts).map(|(c, _, _)| c)
}

/// [`classify`] together with the forward and backward Wolff reports it was built from.
pub fn classify_with_orbits(
    est: &DistanceEstimator,
    phi: &Automorphism,
    p: &CVector,
    opts: ClassifyOptions,
) -> Result<(Classification, WolffReport, WolffReport)> {
    let fwd = wolff_denjoy(est, |z| phi.apply(z), p, opts.wolff)?;
    let bwd = wolff_denjoy(est, |z| phi.apply_inverse(z), p, opts.wolff)?;
    use WolffVerdict::*;
    let verdict = match (fwd.verdict, bwd.verdict) {
        (BoundedOrbit, BoundedOrbit) => Verdict::Elliptic,
        (ConvergesToFace, ConvergesToFace) => {
            let (a, b) = (fwd.tangent().expect("face verdict"), bwd.tangent().expect("face verdict"));
            if a.coincides(b, opts.face_tol) {
                Verdict::Parabolic
            } else {
                Verdict::Hyperbolic
            }
        }
        _ => Verdict::Undetermined,
    };
    let class = Classification {
        verdict,
        attracting: fwd.tangent().cloned(),
        repelling: bwd.tangent().cloned(),
        attracting_point: fwd.limit.as_ref().map(|l| l.point.clone()),
        repelling_point: bwd.limit.as_ref().map(|l| l.point.clone()),
        forward: fwd.verdict,
        backward: bwd.verdict,
        forward_tail: fwd.orbit.points.last().expect("orbit holds its base").clone(),
        backward_tail: bwd.orbit.points.last().expect("orbit holds its base").clone(),
    };
    Ok((class, fwd, bwd))
}

/// Where an orbit in the unbounded Siegel model goes.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "point", rename_all = "snake_case")]
pub enum SiegelEnd {
    Bounded,
    Infinity,
    Boundary(CVector),
}

#[derive(Clone, Debug, Serialize)]
pub struct SiegelClassification {
    pub verdict: Verdict,
    pub forward: SiegelEnd,
    pub backward: SiegelEnd,
}

fn siegel_end(siegel: &SiegelDomain, orbit: &[CVector]) -> SiegelEnd {
    let first = &orbit[0];
    let last = orbit.last().expect("nonempty orbit");
    if last.norm() > 100.0 * (1.0 + first.norm()) {
        return SiegelEnd::Infinity;
    }
    let prev = &orbit[orbit.len().saturating_sub(2)];
    if -siegel.value(last) < 1e-6 && last.distance(prev) < 1e-6 {
        return SiegelEnd::Boundary(last.clone());
    }
    SiegelEnd::Bounded
}

/// Classification directly in the unbounded model, by where forward and backward
/// orbits exit (a boundary point or infinity).
pub fn classify_siegel(siegel: &SiegelDomain, phi: &Automorphism, q: &CVector, steps: usize) -> Result<SiegelClassification> {
    let run = |inverse: bool| -> Result<Vec<CVector>> {
        let mut out = vec![q.clone()];
        let mut z = q.clone();
        for _ in 0..steps {
            z = if inverse { phi.apply_inverse(&z)? } else { phi.apply(&z)? };
            let settled = z.distance(out.last().expect("orbit holds its base")) < 1e-12;
            out.push(z.clone());
            if settled || !(z.norm() < 1e12) {
                break;
            }
        }
        Ok(out)
    };
    let forward = siegel_end(siegel, &run(false)?);
    let backward = siegel_end(siegel, &run(true)?);
    let verdict = match (&forward, &backward) {
        (SiegelEnd::Bounded, SiegelEnd::Bounded) => Verdict::Elliptic,
        (SiegelEnd::Infinity, SiegelEnd::Infinity) => Verdict::Parabolic,
        (SiegelEnd::Boundary(a), SiegelEnd::Boundary(b)) if a.distance(b) < 1e-3 => Verdict::Parabolic,
        (SiegelEnd::Bounded, _) | (_, SiegelEnd::Bounded) => Verdict::Undetermined,
        _ => Verdict::Hyperbolic,
    };
    Ok(SiegelClassification { verdict, forward, backward })
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    /// Word and classification of the first hyperbolic element found.
    pub found: Option<(String, Classification)>,
    /// Every word tried with its verdict.
    pub tried: Vec<(String, Verdict)>,
}

impl SearchReport {
    pub fn found_label(&self) -> Option<&str> {
        self.found.as_ref().map(|(l, _)| l.as_str())
    }
}

/// Reduced words of length `1..=max_len` over the generators and their inverses,
/// generators first, then `a o b^{-1}` style products.
fn words(n: usize, max_len: usize) -> Vec<Vec<(usize, bool)>> {
    let letters: Vec<(usize, bool)> = (0..n).flat_map(|i| [(i, false), (i, true)]).collect();
    let mut out: Vec<Vec<(usize, bool)>> = Vec::new();
    let mut layer: Vec<Vec<(usize, bool)>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &l in &letters {
                if w.last().is_some_and(|&(i, inv)| i == l.0 && inv != l.1) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Classifies the generators, then reduced words up to length `budget`, stopping at
/// the first hyperbolic element.
pub fn hyperbolic_search(
    est: &DistanceEstimator,
    autos: &[Automorphism],
    p: &CVector,
    budget: usize,
    opts: ClassifyOptions,
) -> Result<SearchReport> {
    if autos.is_empty() {
        return Err(Error::InvalidParameter("hyperbolic search needs at least one automorphism".into()));
    }
    let mut tried = Vec::new();
    for w in words(autos.len(), budget.max(1)) {
        // inverses of generators classify like the generators themselves
        if w.len() == 1 && w[0].1 {
            continue;
        }
        let mut phi: Option<Automorphism> = None;
        for &(i, inv) in &w {
            let g = if inv { autos[i].inverse() } else { autos[i].clone() };
            phi = Some(match phi {
                None => g,
                Some(acc) => acc.compose(&g),
            });
        }
        let phi = phi.expect("nonempty word");
        let class = classify(est, &phi, p, opts)?;
        tried.push((phi.label.clone(), class.verdict));
        if class.verdict == Verdict::Hyperbolic {
            return Ok(SearchReport { found: Some((phi.label.clone(), class)), tried });
        }
    }
    Ok(SearchReport { found: None, tried })
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationSample {
    pub t: f64,
    pub best_k: i64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationReport {
    pub samples: Vec<TranslationSample>,
    /// `sup_t min_k` of the upper bracket ends.
    pub sup_min_upper: f64,
    /// Powers actually reached, `(k_lo, k_hi)`.
    pub k_range: (i64, i64),
}

/// How closely the orbit `phi^k(o)`, `|k| <= k_max`, shadows the curve `sigma`.
///
/// Candidates are visited in order of a cheap certified lower bound, so the minimum
/// over all `k` is exact without bracketing every pair.
pub fn translation_check(
    est: &DistanceEstimator,
    phi: &Automorphism,
    sigma: &ParamCurve,
    o: &CVector,
    t_grid: &[f64],
    k_max: usize,
) -> Result<TranslationReport> {
    let dom = est.domain();
    dom.require_interior(o)?;
    let mut orbit = vec![(0i64, o.clone())];
    let mut k_range = (0i64, 0i64);
    // Deep iterates stop being representable (they round onto the boundary or hit the
    // Cayley pole); each direction is cut at the first such step.
    for sign in [1i64, -1] {
        let mut z = o.clone();
        for k in 1..=k_max as i64 {
            let next = if sign > 0 { phi.apply(&z) } else { phi.apply_inverse(&z) };
            z = match next {
                Ok(w) if dom.contains(&w) => w,
                Ok(_) | Err(Error::PoleProximity) => break,
                Err(e) => return Err(e),
            };
            orbit.push((sign * k, z.clone()));
            if sign > 0 {
                k_range.1 = k;
            } else {
                k_range.0 = -k;
            }
        }
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let z = sigma.at(t);
        dom.require_interior(&z)?;
        let mut ranked = Vec::with_capacity(orbit.len());
        for (k, w) in &orbit {
            ranked.push((est.lower(&z, w)?.value, *k, w));
        }
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut best = TranslationSample { t, best_k: 0, upper: f64::INFINITY };
        for (lower, k, w) in ranked {
            if lower >= best.upper {
                break;
            }
            let up = est.upper(&z, w)?.value;
            if up < best.upper {
                best = TranslationSample { t, best_k: k, upper: up };
            }
        }
        samples.push(best);
    }
    let sup_min_upper = samples.iter().map(|s| s.upper).fold(0.0, f64::max);
    Ok(TranslationReport { samples, sup_min_upper, k_range })
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitPoint {
    pub point: BoundaryPoint,
    /// Points sharing a complex tangent (within the face tolerance) share a face index.
    pub face: usize,
    pub word: String,
}

/// Boundary accumulation points of orbits of the generators, their inverses and
/// reduced words up to `word_len`, deduplicated to within `dedup_tol`.
pub fn limit_set_sample(
    est: &DistanceEstimator,
    autos: &[Automorphism],
    p: &CVector,
    word_len: usize,
    opts: ClassifyOptions,
    dedup_tol: f64,
) -> Result<Vec<LimitPoint>> {
    let mut out: Vec<LimitPoint> = Vec::new();
    for w in words(autos.len(), word_len.max(1)) {
        let mut phi: Option<Automorphism> = None;
        for &(i, inv) in &w {
            let g = if inv { autos[i].inverse() } else { autos[i].clone() };
            phi = Some(match phi {
                None => g,
                Some(acc) => acc.compose(&g),
            });
        }
        let phi = phi.expect("nonempty word");
        let rep = wolff_denjoy(est, |z| phi.apply(z), p, opts.wolff)?;
        let Some(limit) = rep.limit else { continue };
        if out.iter().any(|l| l.point.point.distance(&limit.point) < dedup_tol) {
            continue;
        }
        let face = out
            .iter()
            .find(|l| l.point.tangent.coincides(&limit.tangent, opts.face_tol))
            .map(|l| l.face)
            .unwrap_or_else(|| out.iter().map(|l| l.face + 1).max().unwrap_or(0));
        out.push(LimitPoint { point: limit, face, word: phi.label.clone() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_data;
    use crate::gromov::concatenated_normal_curve;
    use crate::models::{ball, SiegelDomain};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk() -> ConvexDomain {
        ball(1, 1.0).unwrap()
    }

    /// Translation `w -> w + 1` of the upper half plane, carried to the disk.
    fn disk_parabolic() -> Automorphism {
        let i = Complex64::i();
        let conj = |s: f64| {
            move |z: &CVector| -> Result<CVector> {
                let w = i * (one() + z[0]) / (one() - z[0]) + s;
                Ok(CVector::new([(w - i) / (w + i)]))
            }
        };
        Automorphism::new(AutomorphismKind::Custom, "parabolic", conj(1.0), conj(-1.0))
    }

    fn short() -> ClassifyOptions {
        ClassifyOptions { wolff: WolffOptions { steps: 200, ..WolffOptions::default() }, ..ClassifyOptions::default() }
    }

    #[test]
    fn rotation_orbit_keeps_its_modulus() {
        let dom = ball(2, 1.0).unwrap();
        let est = orbit_estimator(&dom).unwrap();
        let rot = Automorphism::ball_unitary(&[0.7, 1.1]);
        let p = CVector::new([c(0.3, 0.1), c(-0.2, 0.4)]);
        let rec = iterate_orbit(&est, |z| rot.apply(z), &p, 40).unwrap();
        assert_eq!(rec.points.len(), 41);
        for z in &rec.points {
            assert!((z.norm() - p.norm()).abs() < 1e-12);
        }
        assert!(!rec.stopped_early);
    }

    #[test]
    fn mobius_orbit_converges_to_its_fixed_point() {
        let est = orbit_estimator(&disk()).unwrap();
        let phi = Automorphism::disk_mobius(c(0.5, 0.0)).unwrap();
        let rep = wolff_denjoy(&est, |z| phi.apply(z), &CVector::real(&[0.0]), WolffOptions { steps: 60, ..Default::default() })
            .unwrap();
        assert_eq!(rep.verdict, WolffVerdict::ConvergesToFace);
        let limit = rep.limit.as_ref().unwrap();
        assert!(limit.point.distance(&CVector::real(&[1.0])) < 1e-6);
        assert!(*rep.face_distances.last().unwrap() < 1e-6);
        for w in rep.face_distances[5..].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn ball_mobius_pushes_toward_first_axis() {
        let dom = ball(2, 1.0).unwrap();
        let est = orbit_estimator(&dom).unwrap();
        let phi = Automorphism::ball_mobius(2, c(0.6, 0.0)).unwrap();
        let rep = wolff_denjoy(&est, |z| phi.apply(z), &CVector::real(&[0.1, 0.3]), WolffOptions { steps: 80, ..Default::default() })
            .unwrap();
        assert_eq!(rep.verdict, WolffVerdict::ConvergesToFace);
        assert!(rep.limit.unwrap().point.distance(&CVector::real(&[1.0, 0.0])) < 1e-4);
    }

    #[test]
    fn leaving_the_domain_is_reported() {
        let est = orbit_estimator(&disk()).unwrap();
        let double = |z: &CVector| Ok(z.scale(2.0));
        let err = iterate_orbit(&est, double, &CVector::real(&[0.6]), 5).unwrap_err();
        assert!(matches!(err, Error::EscapeDetected { step: 1, .. }));
    }

    #[test]
    fn automorphisms_round_trip() {
        let dom = ball(2, 1.0).unwrap();
        for phi in [
            Automorphism::ball_mobius(2, c(0.3, -0.4)).unwrap(),
            Automorphism::ball_unitary(&[0.2, -1.3]),
            Automorphism::ball_mobius(2, c(0.5, 0.0)).unwrap().compose(&Automorphism::ball_unitary(&[1.0, 0.5])),
        ] {
            let check = phi.verify(&dom, 50, 7).unwrap();
            assert!(check.maps_inside, "{}", phi.label);
            assert!(check.max_roundtrip < 1e-12, "{} {}", phi.label, check.max_roundtrip);
        }
        let s = SiegelDomain::power(2).unwrap();
        let ell = s.ellipsoid().unwrap().domain();
        let phi = Automorphism::siegel_dilation(&[2], 0.5).unwrap().conjugate_by_cayley(&s);
        let check = phi.verify(&ell, 30, 3).unwrap();
        assert!(check.maps_inside);
        assert!(check.max_roundtrip < 1e-10, "{}", check.max_roundtrip);
        assert!(Automorphism::ball_mobius(2, c(1.0, 0.0)).is_err());
        assert!(Automorphism::siegel_dilation(&[2], 0.0).is_err());
    }

    #[test]
    fn power_apply_handles_negative_exponents() {
        let phi = Automorphism::disk_mobius(c(0.2, 0.1)).unwrap();
        let z = CVector::new([c(0.1, -0.3)]);
        let back = phi.power_apply(-3, &phi.power_apply(3, &z).unwrap()).unwrap();
        assert!(back.distance(&z) < 1e-13);
        assert_eq!(phi.power_apply(0, &z).unwrap(), z);
    }

    #[test]
    fn classifies_the_three_types_on_the_disk() {
        let est = orbit_estimator(&disk()).unwrap();
        let p = CVector::new([c(0.1, 0.2)]);

        let rot = Automorphism::ball_unitary(&[0.9]);
        assert_eq!(classify(&est, &rot, &p, short()).unwrap().verdict, Verdict::Elliptic);

        let par = classify(&est, &disk_parabolic(), &p, short()).unwrap();
        assert_eq!(par.verdict, Verdict::Parabolic);
        assert!(par.attracting_point.unwrap().distance(&CVector::real(&[1.0])) < 0.05);

        let hyp = Automorphism::disk_mobius(c(0.5, 0.0)).unwrap();
        let class = classify(&est, &hyp, &p, short()).unwrap();
        assert_eq!(class.verdict, Verdict::Hyperbolic);
        let (a, r) = (class.attracting_point.unwrap(), class.repelling_point.unwrap());
        assert!(a.distance(&CVector::real(&[1.0])) < 1e-4);
        assert!(r.distance(&CVector::real(&[-1.0])) < 1e-4);

        let swapped = classify(&est, &hyp.inverse(), &p, short()).unwrap();
        assert_eq!(swapped.verdict, Verdict::Hyperbolic);
        assert!(swapped.attracting_point.unwrap().distance(&r) < 1e-4);
        assert!(swapped.repelling_point.unwrap().distance(&a) < 1e-4);
    }

    #[test]
    fn siegel_model_classification_agrees_with_the_ellipsoid() {
        let s = SiegelDomain::power(2).unwrap();
        let q = CVector::new([c(0.3, 2.0), c(0.2, 0.1)]);
        assert!(s.contains(&q));
        let dil = Automorphism::siegel_dilation(&[2], 2.0).unwrap();
        let direct = classify_siegel(&s, &dil, &q, 200).unwrap();
        assert_eq!(direct.verdict, Verdict::Hyperbolic);
        assert_eq!(direct.forward, SiegelEnd::Infinity);
        assert!(matches!(direct.backward, SiegelEnd::Boundary(ref b) if b.norm() < 1e-3));
        let tr = classify_siegel(&s, &Automorphism::siegel_translation(2, 1.0), &q, 400).unwrap();
        assert_eq!(tr.verdict, Verdict::Parabolic);
        let rot = classify_siegel(&s, &Automorphism::siegel_unitary(&[2], 0.8), &q, 50).unwrap();
        assert_eq!(rot.verdict, Verdict::Elliptic);

        let ell = s.ellipsoid().unwrap().domain();
        let est = orbit_estimator(&ell).unwrap();
        let via = classify(&est, &dil.conjugate_by_cayley(&s), &s.cayley_map(&q).unwrap(), ClassifyOptions::default()).unwrap();
        assert_eq!(via.verdict, Verdict::Hyperbolic);
        // forward orbits go to infinity, which the Cayley map sends to (-1, 0)
        assert!(via.attracting_point.unwrap().distance(&CVector::real(&[-1.0, 0.0])) < 0.05);
        assert!(via.repelling_point.unwrap().distance(&CVector::real(&[1.0, 0.0])) < 0.05);
    }

    #[test]
    fn search_finds_the_hyperbolic_generator() {
        let est = orbit_estimator(&disk()).unwrap();
        let p = CVector::new([c(0.1, 0.2)]);
        let rot = Automorphism::ball_unitary(&[0.9]);
        let mob = Automorphism::disk_mobius(c(0.5, 0.0)).unwrap();
        let rep = hyperbolic_search(&est, &[rot.clone(), mob], &p, 2, short()).unwrap();
        assert_eq!(rep.found_label(), Some("mobius(0.5+0i)"));
        assert_eq!(rep.tried[0], (rot.label.clone(), Verdict::Elliptic));

        let none = hyperbolic_search(&est, &[rot], &p, 2, short()).unwrap();
        assert!(none.found.is_none());
        assert!(none.tried.iter().all(|(_, v)| *v == Verdict::Elliptic));
        assert!(hyperbolic_search(&est, &[], &p, 2, short()).is_err());
    }

    #[test]
    fn reduced_words_skip_cancellations() {
        let w = words(2, 2);
        assert_eq!(w.len(), 4 + 4 * 3);
        assert!(w.iter().all(|w| w.windows(2).all(|p| !(p[0].0 == p[1].0 && p[0].1 != p[1].1))));
    }

    #[test]
    fn limit_set_of_a_mobius_pair() {
        let est = orbit_estimator(&disk()).unwrap();
        let p = CVector::new([c(0.1, 0.2)]);
        let autos = [Automorphism::disk_mobius(c(0.5, 0.0)).unwrap(), Automorphism::disk_mobius(c(0.0, 0.5)).unwrap()];
        let pts = limit_set_sample(&est, &autos, &p, 1, short(), 1e-3).unwrap();
        assert_eq!(pts.len(), 4);
        for target in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(pts.iter().any(|l| (l.point.point[0] - target).norm() < 1e-4), "{target}");
        }
        let faces: std::collections::BTreeSet<usize> = pts.iter().map(|l| l.face).collect();
        assert_eq!(faces.len(), 4);
    }

    #[test]
    fn mobius_orbit_shadows_the_diameter() {
        let dom = disk();
        let est = DistanceEstimator::new(dom.clone()).unwrap();
        let phi = Automorphism::disk_mobius(c(0.5, 0.0)).unwrap();
        let fwd = boundary_data(&dom, &CVector::real(&[1.0])).unwrap();
        let bwd = boundary_data(&dom, &CVector::real(&[-1.0])).unwrap();
        let sigma = concatenated_normal_curve(&dom, &fwd, &bwd, 1.0, 3.0).unwrap();
        let grid: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.25).collect();
        let rep = translation_check(&est, &phi, &sigma, &CVector::real(&[0.0]), &grid, 20).unwrap();
        // consecutive orbit points are artanh(1/2) apart along the diameter
        let half_step = 0.5 * 0.5f64.atanh();
        assert!(rep.sup_min_upper <= half_step + 1e-3, "{}", rep.sup_min_upper);
        assert_eq!(rep.samples[12].best_k, 0);
    }
}
