use std::cmp::Ordering;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::{disk_unchecked, halfplane_unchecked};
use crate::geometry::{
    boundary_data_unchecked,
    directional_boundary_distance, nearest_boundary_point, supporting_hyperplanes, CVector, ComplexHyperplane,
    ConvexDomain,
};
use crate::numeric::{adaptive_simpson, nelder_mead, pattern_search, sphere_directions, PatternOptions};
use crate::{Error, Result};

/// Vertices of the inscribed polygon used to locate the best slice disk.
const SLICE_POLYGON: usize = 96;
/// Safety factor applied to numerically maximised enclosing radii.
const RADIUS_INFLATION: f64 = 1e-9;
/// Safety factor applied to numerically minimised inradii.
const RADIUS_DEFLATION: f64 = 1e-10;

/// Tuning knobs for [`DistanceEstimator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketOptions {
    /// Seeded supporting hyperplanes shared by every pair.
    pub hyperplane_samples: usize,
    pub seed: u64,
    /// Absolute tolerance of the chord quadrature.
    pub quad_tol: f64,
    /// Objective evaluations spent on the one-waypoint path; 0 disables it.
    pub waypoint_evals: usize,
    /// Cached boundary points per real dimension, used for enclosing radii.
    pub boundary_samples: usize,
    pub chord: bool,
    pub projections: bool,
    /// Add tangents at the boundary points nearest to `p` and `q` and at the chord exits.
    pub augment: bool,
    /// Simplex evaluations polishing the slice-disk centre against the exact slice radius.
    pub slice_polish: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self {
            hyperplane_samples: 64,
            seed: 0,
            quad_tol: 1e-8,
            waypoint_evals: 24,
            boundary_samples: 64,
            chord: true,
            projections: true,
            augment: true,
            slice_polish: 120,
        }
    }
}

impl BracketOptions {
    /// Cheaper settings for long orbit and grid scans.
    pub fn fast() -> Self {
        Self { hyperplane_samples: 32, quad_tol: 1e-6, waypoint_evals: 0, boundary_samples: 64, ..Self::default() }
    }
}

/// Where a lower bound came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerWitness {
    Trivial,
    /// `1/2 |log(d(H, p) / d(H, q))|`.
    HyperplaneLog { hyperplane: ComplexHyperplane },
    /// Half-plane distance of the projections along the hyperplane's normal.
    HalfPlane { hyperplane: ComplexHyperplane },
    /// Disk distance after `z -> (<z, a> - c) / radius`.
    ProjectionDisk { direction: CVector, center: Complex64, radius: f64 },
    Combined,
}

/// Where an upper bound came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperWitness {
    Trivial,
    Chord,
    Waypoint { point: CVector },
    /// Disk inside the complex line through `p` and `q`.
    SliceDisk { center: CVector, radius: f64 },
    Combined,
}

impl LowerWitness {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Trivial => "trivial",
            Self::HyperplaneLog { .. } => "hyperplane_log",
            Self::HalfPlane { .. } => "half_plane",
            Self::ProjectionDisk { .. } => "projection_disk",
            Self::Combined => "combined",
        }
    }
}

impl UpperWitness {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Trivial => "trivial",
            Self::Chord => "chord",
            Self::Waypoint { .. } => "waypoint",
            Self::SliceDisk { .. } => "slice_disk",
            Self::Combined => "combined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    pub witness: LowerWitness,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    pub witness: UpperWitness,
}

/// Certified bracket `[lower, upper]` on a Kobayashi distance or Gromov product.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: LowerWitness,
    pub upper_witness: UpperWitness,
}

impl DistanceInterval {
    pub fn exact(value: f64) -> Self {
        Self { lower: value, upper: value, lower_witness: LowerWitness::Trivial, upper_witness: UpperWitness::Trivial }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lower - slack <= x && x <= self.upper + slack
    }

    /// `"<upper kind>/<lower kind>"`, used in tables.
    pub fn witness_kind(&self) -> String {
        format!("{}/{}", self.upper_witness.kind(), self.lower_witness.kind())
    }
}

/// Two-sided bounds on the infinitesimal metric `k(p; v)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSample {
    pub point: CVector,
    pub direction: CVector,
    pub upper: f64,
    pub lower: f64,
}

/// `1/2 |log(d(H, p) / d(H, q))|` for a complex hyperplane disjoint from the domain.
pub fn hyperplane_log_bound(h: &ComplexHyperplane, p: &CVector, q: &CVector) -> f64 {
    0.5 * (h.distance(p) / h.distance(q)).ln().abs()
}

/// Half-plane distance between the projections `-i(<z, a> - b)`, when both points
/// lie on the domain side of the oriented hyperplane.
pub fn halfplane_bound(h: &ComplexHyperplane, p: &CVector, q: &CVector) -> Option<f64> {
    if h.real_gap(p) > 0.0 && h.real_gap(q) > 0.0 {
        Some(halfplane_unchecked(h.to_upper_half_plane(p), h.to_upper_half_plane(q)))
    } else {
        None
    }
}

/// Bracketing engine for one domain: caches supporting hyperplanes and a boundary
/// point cloud, then brackets any number of pairs.
#[derive(Clone, Debug)]
pub struct DistanceEstimator {
    domain: ConvexDomain,
    hyperplanes: Vec<ComplexHyperplane>,
    cloud: Vec<(Vec<f64>, CVector)>,
    options: BracketOptions,
}

struct Slice<'a> {
    dom: &'a ConvexDomain,
    p: &'a CVector,
    e: CVector,
    length: f64,
}

impl Slice<'_> {
    fn point(&self, zeta: Complex64) -> CVector {
        self.p.axpy_c(zeta, &self.e)
    }

    /// Distance from `p + zeta e` to the boundary of the slice, or 0 outside.
    fn radius(&self, zeta: Complex64) -> f64 {
        let z = self.point(zeta);
        if !self.dom.contains(&z) {
            return 0.0;
        }
        directional_boundary_distance(self.dom, &z, &self.e).map(|h| h.distance).unwrap_or(0.0)
    }

    fn polygon(&self) -> Vec<Complex64> {
        let mid = Complex64::new(0.5 * self.length, 0.0);
        let m = self.point(mid);
        (0..SLICE_POLYGON)
            .filter_map(|k| {
                let u = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / SLICE_POLYGON as f64);
                let t = self.dom.ray_exit(&m, &self.e.scale_c(u)).ok()?;
                Some(mid + u * t)
            })
            .collect()
    }

    /// Chord integral from `p` to `p + length e` with absolute tolerance `tol`.
    fn chord_length(&self, tol: f64, depth: u32) -> f64 {
        adaptive_simpson(
            |x| {
                let r = self.radius(Complex64::new(x, 0.0));
                if r > 0.0 {
                    1.0 / r
                } else {
                    f64::INFINITY
                }
            },
            0.0,
            self.length,
            tol,
            depth,
        )
    }
}

/// Inradius of a counter-clockwise convex polygon at `c`, 0 if `c` is outside.
fn polygon_inradius(poly: &[Complex64], c: Complex64) -> f64 {
    let n = poly.len();
    let mut best = f64::INFINITY;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let edge = b - a;
        let rel = c - a;
        let cross = edge.re * rel.im - edge.im * rel.re;
        if cross < 0.0 {
            return 0.0;
        }
        let s = ((rel.re * edge.re + rel.im * edge.im) / edge.norm_sqr()).clamp(0.0, 1.0);
        best = best.min((rel - edge * s).norm());
    }
    best
}

/// Disk distance between `0` and `length` inside the disk `B(c, rho)`; infinite if
/// the disk misses either point.
fn disk_path(c: Complex64, rho: f64, length: f64) -> f64 {
    let a = -c / rho;
    let b = (Complex64::new(length, 0.0) - c) / rho;
    if rho <= 0.0 || a.norm() >= 1.0 || b.norm() >= 1.0 {
        f64::INFINITY
    } else {
        disk_unchecked(a, b)
    }
}

/// Algebraic least-squares circle through the points; `None` when degenerate.
fn fit_circle_center(points: &[Complex64]) -> Option<Complex64> {
    // x^2 + y^2 + D x + E y + F = 0
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for w in points {
        let row = nalgebra::Vector3::new(w.re, w.im, 1.0);
        ata += row * row.transpose();
        atb -= row * w.norm_sqr();
    }
    let sol = ata.lu().solve(&atb)?;
    let c = Complex64::new(-0.5 * sol[0], -0.5 * sol[1]);
    c.is_finite().then_some(c)
}

fn complex(x: &[f64]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

impl DistanceEstimator {
    pub fn new(domain: ConvexDomain) -> Result<Self> {
        Self::with_options(domain, BracketOptions::default())
    }

    pub fn with_options(domain: ConvexDomain, options: BracketOptions) -> Result<Self> {
        let hyperplanes = supporting_hyperplanes(&domain, options.hyperplane_samples, options.seed)?;
        let n = 2 * domain.dim();
        let mut cloud = Vec::new();
        for dir in sphere_directions(n, options.boundary_samples * n, options.seed ^ 0xc10d) {
            let x = domain.boundary_point_towards(&CVector::from_real(&dir))?;
            cloud.push((dir, x));
        }
        Ok(Self { domain, hyperplanes, cloud, options })
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn hyperplanes(&self) -> &[ComplexHyperplane] {
        &self.hyperplanes
    }

    pub fn options(&self) -> &BracketOptions {
        &self.options
    }

    /// Bracket on `K(p, q)`.
    pub fn interval(&self, p: &CVector, q: &CVector) -> Result<DistanceInterval> {
        self.domain.require_interior(p)?;
        self.domain.require_interior(q)?;
        let (p, q) = canonical(p, q);
        if p == q {
            return Ok(DistanceInterval::exact(0.0));
        }
        let lower = self.lower_canonical(p, q)?;
        let upper = self.upper_canonical(p, q, Some(lower.value))?;
        if lower.value > upper.value {
            return Err(Error::InternalInconsistency(format!(
                "lower bound {} ({}) exceeds upper bound {} ({})",
                lower.value,
                lower.witness.kind(),
                upper.value,
                upper.witness.kind()
            )));
        }
        Ok(DistanceInterval {
            lower: lower.value,
            upper: upper.value,
            lower_witness: lower.witness,
            upper_witness: upper.witness,
        })
    }

    /// Brackets for many pairs, evaluated on the rayon pool; output order matches input.
    pub fn intervals(&self, pairs: &[(CVector, CVector)]) -> Vec<Result<DistanceInterval>> {
        pairs.par_iter().map(|(p, q)| self.interval(p, q)).collect()
    }

    /// Bracket on the Gromov product `(p|q)_o`, lower end clamped at 0.
    pub fn gromov_product(&self, o: &CVector, p: &CVector, q: &CVector) -> Result<DistanceInterval> {
        let po = self.interval(p, o)?;
        let oq = self.interval(o, q)?;
        let pq = self.interval(p, q)?;
        Ok(combine_product(&po, &oq, &pq))
    }

    pub fn upper(&self, p: &CVector, q: &CVector) -> Result<UpperBound> {
        self.domain.require_interior(p)?;
        self.domain.require_interior(q)?;
        let (p, q) = canonical(p, q);
        if p == q {
            return Ok(UpperBound { value: 0.0, witness: UpperWitness::Trivial });
        }
        self.upper_canonical(p, q, None)
    }

    /// Full lower bound: shared and pair-specific hyperplanes plus disk projections.
    pub fn lower(&self, p: &CVector, q: &CVector) -> Result<LowerBound> {
        self.domain.require_interior(p)?;
        self.domain.require_interior(q)?;
        let (p, q) = canonical(p, q);
        if p == q {
            return Ok(LowerBound { value: 0.0, witness: LowerWitness::Trivial });
        }
        self.lower_canonical(p, q)
    }

    /// Lower bound from an explicit hyperplane list only (log bound and half-plane refinement).
    pub fn lower_with(&self, p: &CVector, q: &CVector, hyperplanes: &[ComplexHyperplane]) -> Result<LowerBound> {
        self.domain.require_interior(p)?;
        self.domain.require_interior(q)?;
        let (p, q) = canonical(p, q);
        Ok(hyperplane_lower(p, q, hyperplanes))
    }

    /// Tangent hyperplanes at the boundary points nearest to `p` and `q` and where the
    /// line through them exits the domain.
    pub fn pair_hyperplanes(&self, p: &CVector, q: &CVector) -> Result<Vec<ComplexHyperplane>> {
        let mut points = Vec::with_capacity(4);
        points.push(nearest_boundary_point(&self.domain, p)?.1);
        points.push(nearest_boundary_point(&self.domain, q)?.1);
        let d = q - p;
        if d.norm() > 0.0 {
            points.push(q.axpy(self.domain.ray_exit(q, &d)?, &d));
            points.push(p.axpy(-self.domain.ray_exit(p, &-&d)?, &d));
        }
        let mut out = Vec::with_capacity(points.len());
        for x in points {
            if let Ok(bp) = boundary_data_unchecked(&self.domain, &x) {
                out.push(bp.tangent);
            }
        }
        Ok(out)
    }

    fn lower_canonical(&self, p: &CVector, q: &CVector) -> Result<LowerBound> {
        let mut hs = self.hyperplanes.clone();
        if self.options.augment {
            hs.extend(self.pair_hyperplanes(p, q)?);
        }
        let mut best = hyperplane_lower(p, q, &hs);
        if self.options.projections {
            let mut dirs = Vec::with_capacity(5);
            if let Some(e) = (q - p).normalized() {
                dirs.push(e);
            }
            if self.options.augment {
                for h in &hs[self.hyperplanes.len()..] {
                    dirs.push(h.normal.clone());
                }
            }
            for a in dirs {
                if let Some((value, center, radius)) = self.projection_bound(p, q, &a) {
                    if value > best.value {
                        best = LowerBound { value, witness: LowerWitness::ProjectionDisk { direction: a, center, radius } };
                    }
                }
            }
        }
        Ok(best)
    }

    /// `max |<x, a> - c|` over the boundary: cloud maximum, optionally refined by compass
    /// search over ray directions and inflated by a relative safety margin.
    fn enclosing_radius(&self, a: &CVector, c: Complex64, accurate: bool) -> f64 {
        let score = |x: &CVector| (x.dot(a) - c).norm();
        let mut ranked: Vec<(f64, usize)> = self.cloud.iter().enumerate().map(|(i, (_, x))| (score(x), i)).collect();
        ranked.sort_by(|x, y| y.0.total_cmp(&x.0));
        if !accurate {
            return ranked[0].0;
        }
        let mut best = ranked[0].0;
        for (k, &(_, idx)) in ranked.iter().take(2).enumerate() {
            let objective = |u: &[f64]| -> f64 {
                match self.domain.boundary_point_towards(&CVector::from_real(u)) {
                    Ok(x) => -score(&x),
                    Err(_) => f64::INFINITY,
                }
            };
            let opts = PatternOptions {
                initial_step: 0.1,
                min_step: 1e-8,
                max_evals: 500,
                rotate_seed: Some(self.options.seed.wrapping_add(k as u64)),
            };
            let (_, f) = pattern_search(objective, &self.cloud[idx].0, opts);
            best = best.max(-f);
        }
        best * (1.0 + RADIUS_INFLATION)
    }

    /// Best disk bound for the projection `z -> <z, a>`: returns `(value, center, radius)`.
    fn projection_bound(&self, p: &CVector, q: &CVector, a: &CVector) -> Option<(f64, Complex64, f64)> {
        let (pp, pq) = (p.dot(a), q.dot(a));
        let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(-f64::INFINITY, -f64::INFINITY));
        for (_, x) in &self.cloud {
            let w = x.dot(a);
            lo = Complex64::new(lo.re.min(w.re), lo.im.min(w.im));
            hi = Complex64::new(hi.re.max(w.re), hi.im.max(w.im));
        }
        let start = 0.5 * (lo + hi);
        let span = (hi - lo).norm().max(1e-12);
        let value_at = |c: Complex64, rho: f64| -> f64 {
            let (u, v) = ((pp - c) / rho, (pq - c) / rho);
            if u.norm() >= 1.0 || v.norm() >= 1.0 {
                0.0
            } else {
                disk_unchecked(u, v)
            }
        };
        let (x, _) = nelder_mead(
            |x| -value_at(complex(x), self.enclosing_radius(a, complex(x), false)),
            &[start.re, start.im],
            0.05 * span,
            1e-12,
            150,
        );
        let mut best = (0.0, Complex64::new(0.0, 0.0), 0.0);
        for c in [complex(&x), self.domain.center().dot(a)] {
            let rho = self.enclosing_radius(a, c, true);
            let value = value_at(c, rho);
            if value > best.0 {
                best = (value, c, rho);
            }
        }
        (best.0 > 0.0).then_some(best)
    }

    fn upper_canonical(&self, p: &CVector, q: &CVector, lower: Option<f64>) -> Result<UpperBound> {
        let diff = q - p;
        let length = diff.norm();
        let slice = Slice { dom: &self.domain, p, e: diff.scale(1.0 / length), length };
        let mut best = UpperBound { value: f64::INFINITY, witness: UpperWitness::Chord };

        let (c, rho) = self.slice_disk(&slice);
        let v = disk_path(c, rho, length);
        if v < best.value {
            best = UpperBound { value: v, witness: UpperWitness::SliceDisk { center: slice.point(c), radius: rho } };
        }
        let settled = |b: &UpperBound| lower.is_some_and(|l| b.value - l <= 1e-9 * (1.0 + l));
        // A coarse chord well above the disk bound means neither path strategy will win.
        let hopeless = slice.chord_length(1e-4, 12) > 1.01 * best.value;
        // the chord is the fallback whenever the disk misses an endpoint
        if (self.options.chord || !best.value.is_finite()) && !settled(&best) && !hopeless {
            let v = slice.chord_length(self.options.quad_tol, 24);
            if v < best.value {
                best = UpperBound { value: v, witness: UpperWitness::Chord };
            }
        }
        if self.options.waypoint_evals > 0 && !settled(&best) && !hopeless {
            if let Some((v, w)) = self.waypoint(p, q) {
                if v < best.value {
                    best = UpperBound { value: v, witness: UpperWitness::Waypoint { point: w } };
                }
            }
        }
        if !best.value.is_finite() {
            return Err(Error::InternalInconsistency("no finite upper bound found".into()));
        }
        Ok(best)
    }

    /// Largest-advantage disk in the slice containing `0` and `length`: polygon search, then
    /// polish with the exact slice radius. Returns slice-coordinate center and radius.
    fn slice_disk(&self, slice: &Slice<'_>) -> (Complex64, f64) {
        let poly = slice.polygon();
        let mid = Complex64::new(0.5 * slice.length, 0.0);
        let scale = polygon_inradius(&poly, mid).max(1e-6 * slice.length.max(1e-12));
        let (x, _) = nelder_mead(
            |x| disk_path(complex(x), polygon_inradius(&poly, complex(x)), slice.length),
            &[mid.re, mid.im],
            0.2 * scale,
            1e-13,
            400,
        );
        let exact = |c: Complex64| slice.radius(c) * (1.0 - RADIUS_DEFLATION);
        let value = |c: Complex64| disk_path(c, exact(c), slice.length);
        // When the slice is a round disk the circle fit recovers its centre exactly,
        // which the simplex only approaches through the kink of the inradius.
        let mut candidates = vec![complex(&x)];
        candidates.extend(fit_circle_center(&poly));
        let mut best = candidates
            .into_iter()
            .map(|c| (value(c), c))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one candidate");
        if self.options.slice_polish > 0 {
            let (x, v) =
                nelder_mead(|x| value(complex(x)), &[best.1.re, best.1.im], 0.02 * scale, 1e-15, self.options.slice_polish);
            if v < best.0 {
                best = (v, complex(&x));
            }
        }
        (best.1, exact(best.1))
    }

    /// Two chord segments through an optimised interior waypoint.
    fn waypoint(&self, p: &CVector, q: &CVector) -> Option<(f64, CVector)> {
        let segment = |a: &CVector, b: &CVector, tol: f64, depth: u32| -> f64 {
            let d = b - a;
            let len = d.norm();
            if len == 0.0 {
                return 0.0;
            }
            Slice { dom: &self.domain, p: a, e: d.scale(1.0 / len), length: len }.chord_length(tol, depth)
        };
        let path = |w: &CVector, tol: f64, depth: u32| -> f64 {
            if !self.domain.contains(w) {
                return f64::INFINITY;
            }
            segment(p, w, tol, depth) + segment(w, q, tol, depth)
        };
        let mid = (p + q).scale(0.5);
        let opts = PatternOptions {
            initial_step: 0.1 * p.distance(q).max(1e-3),
            min_step: 1e-6,
            max_evals: self.options.waypoint_evals,
            rotate_seed: Some(self.options.seed),
        };
        let (x, _) = pattern_search(|x| path(&CVector::from_real(x), 1e-4, 12), &mid.to_real(), opts);
        let w = CVector::from_real(&x);
        let v = path(&w, self.options.quad_tol, 24);
        v.is_finite().then_some((v, w))
    }

    /// Bounds on the infinitesimal metric at `p` in direction `v`.
    pub fn infinitesimal(&self, p: &CVector, v: &CVector) -> Result<MetricSample> {
        self.domain.require_interior(p)?;
        let hit = directional_boundary_distance(&self.domain, p, v)?;
        let vn = v.norm();
        let upper = vn / hit.distance;

        let mut hs = self.hyperplanes.clone();
        let mut dirs = vec![v.scale(1.0 / vn)];
        for x in [nearest_boundary_point(&self.domain, p)?.1, hit.point.clone()] {
            if let Ok(bp) = boundary_data_unchecked(&self.domain, &x) {
                dirs.push(bp.tangent.normal.clone());
                hs.push(bp.tangent);
            }
        }
        let mut lower: f64 = 0.0;
        for h in &hs {
            let gap = h.real_gap(p);
            if gap > 0.0 {
                lower = lower.max(v.dot(&h.normal).norm() / (2.0 * gap));
            }
        }
        if self.options.projections {
            for a in &dirs {
                let pa = p.dot(a);
                let va = v.dot(a).norm();
                let value_at = |c: Complex64, rho: f64| -> f64 {
                    let gap = rho * rho - (pa - c).norm_sqr();
                    if gap > 0.0 {
                        va * rho / gap
                    } else {
                        0.0
                    }
                };
                let (x, _) = nelder_mead(
                    |x| -value_at(complex(x), self.enclosing_radius(a, complex(x), false)),
                    &[pa.re, pa.im],
                    0.05 * self.domain.bounding_radius(),
                    1e-14,
                    300,
                );
                let c = complex(&x);
                lower = lower.max(value_at(c, self.enclosing_radius(a, c, true)));
            }
        }
        if lower > upper {
            return Err(Error::InternalInconsistency(format!("metric lower {lower} exceeds upper {upper}")));
        }
        Ok(MetricSample { point: p.clone(), direction: v.clone(), upper, lower })
    }
}

fn canonical<'a>(p: &'a CVector, q: &'a CVector) -> (&'a CVector, &'a CVector) {
    if q.lex_cmp(p) == Ordering::Less {
        (q, p)
    } else {
        (p, q)
    }
}

fn hyperplane_lower(p: &CVector, q: &CVector, hs: &[ComplexHyperplane]) -> LowerBound {
    let mut best = LowerBound { value: 0.0, witness: LowerWitness::Trivial };
    for h in hs {
        let v = hyperplane_log_bound(h, p, q);
        if v > best.value {
            best = LowerBound { value: v, witness: LowerWitness::HyperplaneLog { hyperplane: h.clone() } };
        }
        if let Some(v) = halfplane_bound(h, p, q) {
            if v > best.value {
                best = LowerBound { value: v, witness: LowerWitness::HalfPlane { hyperplane: h.clone() } };
            }
        }
    }
    best
}

/// Interval arithmetic for `(K(p,o) + K(o,q) - K(p,q)) / 2` with the lower end clamped at 0.
pub fn combine_product(po: &DistanceInterval, oq: &DistanceInterval, pq: &DistanceInterval) -> DistanceInterval {
    DistanceInterval {
        lower: (0.5 * (po.lower + oq.lower - pq.upper)).max(0.0),
        upper: 0.5 * (po.upper + oq.upper - pq.lower),
        lower_witness: LowerWitness::Combined,
        upper_witness: UpperWitness::Combined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ball, PolynomialEllipsoid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polygon_inradius_of_square() {
        let sq = [c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)];
        assert!((polygon_inradius(&sq, c(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((polygon_inradius(&sq, c(0.5, 0.0)) - 0.5).abs() < 1e-15);
        assert_eq!(polygon_inradius(&sq, c(2.0, 0.0)), 0.0);
    }

    #[test]
    fn disk_pair_is_exact() {
        let est = DistanceEstimator::new(ball(1, 1.0).unwrap()).unwrap();
        let iv = est.interval(&CVector::zeros(1), &CVector::real(&[0.5])).unwrap();
        let exact = 0.5f64.atanh();
        assert!(iv.contains(exact, 0.0), "{iv:?}");
        assert!(iv.width() <= 1e-6, "{iv:?}");
    }

    #[test]
    fn ball_through_center() {
        let est = DistanceEstimator::new(ball(2, 1.0).unwrap()).unwrap();
        let q = CVector::real(&[0.9, 0.0]);
        let iv = est.interval(&CVector::zeros(2), &q).unwrap();
        assert!(iv.contains(0.9f64.atanh(), 0.0), "{iv:?}");
        assert!(iv.width() <= 1e-6, "{iv:?}");
        let up = est.upper(&CVector::zeros(2), &CVector::real(&[0.5, 0.0])).unwrap();
        assert!((up.value - 0.549_306_1).abs() < 1e-7);
    }

    #[test]
    fn equal_points_give_zero() {
        let est = DistanceEstimator::new(ball(2, 1.0).unwrap()).unwrap();
        let p = CVector::real(&[0.2, 0.3]);
        let iv = est.interval(&p, &p).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
        assert_eq!(est.lower_with(&p, &p, est.hyperplanes()).unwrap().value, 0.0);
    }

    #[test]
    fn explicit_hyperplane_lower_bound() {
        let est = DistanceEstimator::new(ball(1, 1.0).unwrap()).unwrap();
        let h = ComplexHyperplane::through(&CVector::real(&[1.0]), &CVector::real(&[1.0])).unwrap();
        let p = CVector::zeros(1);
        let q = CVector::real(&[0.9]);
        let log = hyperplane_log_bound(&h, &p, &q);
        assert!((log - 0.5 * 10f64.ln()).abs() < 1e-12);
        // both projections lie on the imaginary axis, so the refinement coincides with the log bound
        let hp = halfplane_bound(&h, &p, &q).unwrap();
        assert!((hp - 0.5 * 5.05f64.acosh()).abs() < 1e-12);
        assert!(hp >= log - 1e-12);
        let lb = est.lower_with(&p, &q, &[h]).unwrap();
        assert!(lb.value <= 0.9f64.atanh());
    }

    #[test]
    fn symmetric_brackets() {
        let est = DistanceEstimator::new(PolynomialEllipsoid::power(2).unwrap().domain()).unwrap();
        let p = CVector::new([c(0.2, 0.1), c(0.3, -0.2)]);
        let q = CVector::new([c(-0.5, 0.2), c(0.1, 0.4)]);
        assert_eq!(est.interval(&p, &q).unwrap(), est.interval(&q, &p).unwrap());
    }

    #[test]
    fn infinitesimal_examples() {
        let disk = DistanceEstimator::new(ball(1, 1.0).unwrap()).unwrap();
        let s = disk.infinitesimal(&CVector::zeros(1), &CVector::real(&[1.0])).unwrap();
        assert!((s.upper - 1.0).abs() < 1e-12);
        assert!(s.lower <= 1.0 && s.lower >= 0.5);
        let b = DistanceEstimator::new(ball(2, 1.0).unwrap()).unwrap();
        let p = CVector::real(&[0.5, 0.0]);
        let s = b.infinitesimal(&p, &CVector::real(&[1.0, 0.0])).unwrap();
        assert!((s.upper - 2.0).abs() < 1e-9);
        assert!(s.lower <= 4.0 / 3.0 + 1e-12 && 4.0 / 3.0 <= s.upper);
        let s2 = b.infinitesimal(&p, &CVector::real(&[2.0, 0.0])).unwrap();
        assert!((s2.upper - 2.0 * s.upper).abs() < 1e-9 * s.upper);
        assert!((s2.lower - 2.0 * s.lower).abs() < 1e-9 * s.lower.max(1.0));
    }

    #[test]
    fn gromov_product_degenerate_cases() {
        let est = DistanceEstimator::new(ball(1, 1.0).unwrap()).unwrap();
        let o = CVector::zeros(1);
        let p = CVector::real(&[0.6]);
        let pp = est.gromov_product(&o, &p, &p).unwrap();
        assert!(pp.contains(0.6f64.atanh(), 1e-12), "{pp:?}");
        let q = CVector::real(&[-0.2]);
        let at_p = est.gromov_product(&p, &p, &q).unwrap();
        assert!(at_p.contains(0.0, 1e-12), "{at_p:?}");
    }
}
