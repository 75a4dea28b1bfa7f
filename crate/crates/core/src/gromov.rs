//! Almost-geodesics, quasi-geodesic certificates and Gromov-product experiments.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::{boundary_distance, same_complex_tangent, BoundaryPoint, CVector, ConvexDomain};
use crate::kobayashi::{combine_product, DistanceEstimator, DistanceInterval, UpperWitness};
use crate::{Error, Result};

/// Threshold (natural-log units) above which a Gromov-product trajectory counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 3.0;

/// A parametrised curve `t -> sigma(t)` on `[start, end]`; `end` may be infinite.
#[derive(Clone)]
pub struct ParamCurve {
    eval: Arc<dyn Fn(f64) -> CVector + Send + Sync>,
    pub start: f64,
    pub end: f64,
    pub label: String,
}

impl fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamCurve").field("label", &self.label).field("start", &self.start).field("end", &self.end).finish()
    }
}

impl ParamCurve {
    pub fn new<F>(start: f64, end: f64, label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> CVector + Send + Sync + 'static,
    {
        Self { eval: Arc::new(eval), start, end, label: label.into() }
    }

    pub fn at(&self, t: f64) -> CVector {
        (self.eval)(t)
    }

    /// Checks membership at `n` equally spaced parameters (capped at `start + 20` on half-lines).
    pub fn check_inside(&self, dom: &ConvexDomain, n: usize) -> Result<()> {
        let end = if self.end.is_finite() { self.end } else { self.start + 20.0 };
        for k in 0..n.max(1) {
            let t = if n <= 1 { self.start } else { self.start + (end - self.start) * k as f64 / (n - 1) as f64 };
            let z = self.at(t);
            if !dom.contains(&z) {
                return Err(Error::PointOutsideDomain { r: dom.value(&z) });
            }
        }
        Ok(())
    }
}

/// `t -> x + eps e^{-2t} n_x` on `[0, t_max]`.
pub fn normal_curve(dom: &ConvexDomain, x: &BoundaryPoint, eps: f64, t_max: f64) -> Result<ParamCurve> {
    if !(eps > 0.0) || !dom.contains(&x.point.axpy(eps, &x.normal)) {
        return Err(Error::EpsTooLarge { eps });
    }
    let (point, normal) = (x.point.clone(), x.normal.clone());
    Ok(ParamCurve::new(0.0, t_max, format!("normal curve at {}", x.point), move |t| {
        point.axpy(eps * (-2.0 * t).exp(), &normal)
    }))
}

/// Largest `eps <= 0.5 * bounding_radius` with `x + eps n_x` inside, by bisection.
pub fn normal_eps(dom: &ConvexDomain, x: &BoundaryPoint) -> f64 {
    let cap = 0.5 * dom.bounding_radius();
    if dom.contains(&x.point.axpy(cap, &x.normal)) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if dom.contains(&x.point.axpy(mid, &x.normal)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Two normal curves glued at `t = 0`: `t >= 0` runs into `forward`, `t <= 0` into `backward`.
pub fn concatenated_normal_curve(
    dom: &ConvexDomain,
    forward: &BoundaryPoint,
    backward: &BoundaryPoint,
    eps: f64,
    t_max: f64,
) -> Result<ParamCurve> {
    for x in [forward, backward] {
        if !(eps > 0.0) || !dom.contains(&x.point.axpy(eps, &x.normal)) {
            return Err(Error::EpsTooLarge { eps });
        }
    }
    let (fp, fnrm) = (forward.point.clone(), forward.normal.clone());
    let (bp, bnrm) = (backward.point.clone(), backward.normal.clone());
    Ok(ParamCurve::new(-t_max, t_max, "concatenated normal curves", move |t| {
        if t >= 0.0 {
            fp.axpy(eps * (-2.0 * t).exp(), &fnrm)
        } else {
            bp.axpy(eps * (2.0 * t).exp(), &bnrm)
        }
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct CertSample {
    pub s: f64,
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Outcome of checking `|t-s|/A - B <= K(sigma(s), sigma(t)) <= A|t-s| + B` on a grid.
///
/// Upper inequalities are checked with upper bracket ends and lower inequalities with
/// lower ends, so a pass is certified.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiGeodesicCert {
    pub a: f64,
    pub b: f64,
    pub samples: Vec<CertSample>,
    pub passed: bool,
    /// Smallest `B` that makes every sample pass with the given `A`.
    pub tight_b: f64,
    /// Smallest `B` that works with `A = 1`.
    pub tight_b_unit: f64,
    /// Smallest `A` that works with `B = 0`.
    pub tight_a: f64,
    /// `max(e^{tight_b_unit}, sampled Lipschitz constant)`.
    pub k_almost: Option<f64>,
}

impl QuasiGeodesicCert {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.pass).count()
    }
}

pub fn certify_quasi_geodesic(
    est: &DistanceEstimator,
    curve: &ParamCurve,
    a: f64,
    b: f64,
    grid: &[f64],
) -> Result<QuasiGeodesicCert> {
    if !(a >= 1.0) || !(b >= 0.0) {
        return Err(Error::InvalidParameter(format!("need A >= 1 and B >= 0, got ({a}, {b})")));
    }
    let points: Vec<CVector> = grid.iter().map(|&t| curve.at(t)).collect();
    let mut index = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..grid.len() {
        for j in i..grid.len() {
            index.push((i, j));
            pairs.push((points[i].clone(), points[j].clone()));
        }
    }
    let intervals = est.intervals(&pairs);
    let mut samples = Vec::with_capacity(pairs.len());
    let (mut tight_b, mut tight_b_unit, mut tight_a, mut lipschitz) = (0.0f64, 0.0f64, 1.0f64, 0.0f64);
    for ((i, j), iv) in index.into_iter().zip(intervals) {
        let iv = iv?;
        let (s, t) = (grid[i], grid[j]);
        let gap = (t - s).abs();
        let pass = iv.upper <= a * gap + b && iv.lower >= gap / a - b;
        tight_b = tight_b.max(iv.upper - a * gap).max(gap / a - iv.lower);
        tight_b_unit = tight_b_unit.max(iv.upper - gap).max(gap - iv.lower);
        if gap > 0.0 {
            let ratio_up = iv.upper / gap;
            let ratio_low = if iv.lower > 0.0 { gap / iv.lower } else { f64::INFINITY };
            tight_a = tight_a.max(ratio_up).max(ratio_low);
            lipschitz = lipschitz.max(ratio_up);
        } else if iv.upper > 0.0 {
            tight_a = f64::INFINITY;
        }
        samples.push(CertSample { s, t, lower: iv.lower, upper: iv.upper, pass });
    }
    let passed = samples.iter().all(|s| s.pass);
    Ok(QuasiGeodesicCert {
        a,
        b,
        samples,
        passed,
        tight_b,
        tight_b_unit,
        tight_a,
        k_almost: Some(tight_b_unit.exp().max(lipschitz).max(1.0)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyPlan {
    /// Every `(n, m)` with `n, m <= n_steps`.
    Grid,
    /// Only `n = m`.
    Diagonal,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductSample {
    pub n: usize,
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub same_tangent: bool,
    pub samples: Vec<ProductSample>,
    /// First diagonal level whose lower end exceeds [`DIVERGENCE_THRESHOLD`].
    pub divergence_level: Option<usize>,
    pub max_upper: f64,
}

impl DichotomyReport {
    /// Samples with `n = m`, in increasing level.
    pub fn diagonal(&self) -> Vec<&ProductSample> {
        self.samples.iter().filter(|s| s.n == s.m).collect()
    }
}

/// Gromov products `(p_n | q_m)_o` for `p_n = x + 2^{-n} n_x`, `q_m = y + 2^{-m} n_y`.
pub fn product_dichotomy_experiment(
    est: &DistanceEstimator,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
    o: &CVector,
    n_steps: usize,
    plan: DichotomyPlan,
) -> Result<DichotomyReport> {
    let level = |b: &BoundaryPoint, n: usize| b.point.axpy(0.5f64.powi(n as i32), &b.normal);
    let ps: Vec<CVector> = (0..=n_steps).map(|n| level(x, n)).collect();
    let qs: Vec<CVector> = (0..=n_steps).map(|n| level(y, n)).collect();
    let from_o = |pts: &[CVector]| -> Result<Vec<DistanceInterval>> {
        let pairs: Vec<(CVector, CVector)> = pts.iter().map(|p| (p.clone(), o.clone())).collect();
        est.intervals(&pairs).into_iter().collect()
    };
    let po = from_o(&ps)?;
    let oq = from_o(&qs)?;
    let index: Vec<(usize, usize)> = match plan {
        DichotomyPlan::Grid => (0..=n_steps).flat_map(|n| (0..=n_steps).map(move |m| (n, m))).collect(),
        DichotomyPlan::Diagonal => (0..=n_steps).map(|n| (n, n)).collect(),
    };
    let pairs: Vec<(CVector, CVector)> = index.iter().map(|&(n, m)| (ps[n].clone(), qs[m].clone())).collect();
    let pq = est.intervals(&pairs);
    let mut samples = Vec::with_capacity(index.len());
    for (&(n, m), iv) in index.iter().zip(pq) {
        let prod = combine_product(&po[n], &oq[m], &iv?);
        samples.push(ProductSample { n, m, lower: prod.lower, upper: prod.upper });
    }
    let divergence_level = samples.iter().filter(|s| s.n == s.m).find(|s| s.lower > DIVERGENCE_THRESHOLD).map(|s| s.n);
    let max_upper = samples.iter().map(|s| s.upper).fold(0.0, f64::max);
    Ok(DichotomyReport { same_tangent: same_complex_tangent(x, y, 1e-6), samples, divergence_level, max_upper })
}

#[derive(Clone, Debug, Serialize)]
pub struct FourPointReport {
    /// Largest four-point defect over all ordered quadruples, from interval midpoints.
    pub delta: f64,
    /// Widest distance bracket used; `delta` is uncertain by about this much.
    pub slack: f64,
    pub quadruple: [usize; 4],
}

/// Four-point hyperbolicity estimate `max min((x|z)_w, (z|y)_w) - (x|y)_w`.
pub fn four_point_delta(est: &DistanceEstimator, points: &[CVector]) -> Result<FourPointReport> {
    let n = points.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let mut index = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            index.push((i, j));
            pairs.push((points[i].clone(), points[j].clone()));
        }
    }
    let mut dist = vec![vec![0.0; n]; n];
    let mut slack = 0.0f64;
    for ((i, j), iv) in index.into_iter().zip(est.intervals(&pairs)) {
        let iv = iv?;
        dist[i][j] = iv.midpoint();
        dist[j][i] = iv.midpoint();
        slack = slack.max(iv.width());
    }
    let prod = |x: usize, y: usize, w: usize| 0.5 * (dist[x][w] + dist[y][w] - dist[x][y]);
    let mut best = (0.0f64, [0, 1, 2, 3]);
    for w in 0..n {
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let defect = prod(x, z, w).min(prod(z, y, w)) - prod(x, y, w);
                    if defect > best.0 {
                        best = (defect, [x, y, z, w]);
                    }
                }
            }
        }
    }
    Ok(FourPointReport { delta: best.0, slack, quadruple: best.1 })
}

#[derive(Clone, Debug, Serialize)]
pub struct VisibilityLevel {
    pub n: usize,
    pub upper: f64,
    pub witness: String,
    /// Largest Euclidean boundary distance along the witness path: the path enters
    /// `{delta >= depth}`.
    pub depth: f64,
    pub deepest: CVector,
}

#[derive(Clone, Debug, Serialize)]
pub struct VisibilityReport {
    pub levels: Vec<VisibilityLevel>,
}

impl VisibilityReport {
    /// Smallest depth over the levels; bounded below when the paths bend into a compact core.
    pub fn min_depth(&self) -> f64 {
        self.levels.iter().map(|l| l.depth).fold(f64::INFINITY, f64::min)
    }
}

/// Samples of the path certifying an upper bound between `p` and `q`.
pub fn witness_path(p: &CVector, q: &CVector, witness: &UpperWitness, n: usize) -> Vec<CVector> {
    let n = n.max(2);
    let segment = |a: &CVector, b: &CVector, k: usize| -> Vec<CVector> {
        let d = b - a;
        (0..k).map(|i| a.axpy(i as f64 / (k - 1) as f64, &d)).collect()
    };
    match witness {
        UpperWitness::SliceDisk { center, radius } => {
            let diff = q - p;
            let length = diff.norm();
            if length == 0.0 {
                return vec![p.clone()];
            }
            let e = diff.scale(1.0 / length);
            let zc = (center - p).dot(&e);
            let a = -zc / radius;
            let b = (Complex64::new(length, 0.0) - zc) / radius;
            let one = Complex64::new(1.0, 0.0);
            let bb = (b - a) / (one - a.conj() * b);
            (0..n)
                .map(|i| {
                    let w = bb * (i as f64 / (n - 1) as f64);
                    let u = (w + a) / (one + a.conj() * w);
                    p.axpy_c(zc + u * radius, &e)
                })
                .collect()
        }
        UpperWitness::Waypoint { point } => {
            let mut out = segment(p, point, n / 2 + 1);
            out.extend(segment(point, q, n / 2 + 1).into_iter().skip(1));
            out
        }
        UpperWitness::Trivial => vec![p.clone()],
        UpperWitness::Chord | UpperWitness::Combined => segment(p, q, n),
    }
}

/// For levels `n = 1..=n_levels`, the witness path between `x + 2^{-n} n_x` and
/// `y + 2^{-n} n_y` and how deep it reaches into the domain.
pub fn visibility_probe(
    est: &DistanceEstimator,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
    n_levels: usize,
) -> Result<VisibilityReport> {
    if same_complex_tangent(x, y, 1e-6) {
        return Err(Error::SameFace);
    }
    let dom = est.domain();
    let mut levels = Vec::with_capacity(n_levels);
    for n in 1..=n_levels.max(1) {
        let step = 0.5f64.powi(n as i32);
        let p = x.point.axpy(step, &x.normal);
        let q = y.point.axpy(step, &y.normal);
        let up = est.upper(&p, &q)?;
        let mut best = (0.0, p.clone());
        for z in witness_path(&p, &q, &up.witness, 65) {
            let d = boundary_distance(dom, &z)?;
            if d > best.0 {
                best = (d, z);
            }
        }
        levels.push(VisibilityLevel { n, upper: up.value, witness: up.witness.kind().to_string(), depth: best.0, deepest: best.1 });
    }
    Ok(VisibilityReport { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_data;
    use crate::kobayashi::{dist_disk, BracketOptions};
    use crate::models::{ball, PolynomialEllipsoid};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_estimator() -> DistanceEstimator {
        DistanceEstimator::new(ball(1, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn disk_radius_curve_is_almost_geodesic() {
        let dom = ball(1, 1.0).unwrap();
        let x = boundary_data(&dom, &CVector::real(&[1.0])).unwrap();
        let curve = normal_curve(&dom, &x, 1.0, 5.0).unwrap();
        assert_eq!(curve.at(0.0), x.point.axpy(1.0, &x.normal));
        for (s, t) in [(0.0, 1.0), (0.5, 4.0), (2.0, 5.0)] {
            let exact = dist_disk(curve.at(s)[0], curve.at(t)[0]).unwrap();
            assert!((exact - (t - s)).abs() <= 0.5 * 2f64.ln() + 1e-9, "{exact}");
        }
        let grid: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let cert = certify_quasi_geodesic(&disk_estimator(), &curve, 1.0, 2f64.ln(), &grid).unwrap();
        assert!(cert.passed, "{:?}", cert.samples.iter().filter(|s| !s.pass).collect::<Vec<_>>());
        assert!(cert.tight_b_unit <= 2f64.ln());
    }

    #[test]
    fn euclidean_chord_is_not_a_geodesic() {
        let est = DistanceEstimator::new(ball(2, 1.0).unwrap()).unwrap();
        let chord = ParamCurve::new(-0.9, 0.9, "chord", |t| CVector::real(&[t, 0.0]));
        let cert = certify_quasi_geodesic(&est, &chord, 1.0, 0.1, &[-0.9, 0.0, 0.9]).unwrap();
        assert!(!cert.passed);
        let far = cert.samples.iter().find(|s| s.s == -0.9 && s.t == 0.9).unwrap();
        assert!(!far.pass);
    }

    #[test]
    fn single_point_grid_is_vacuous() {
        let chord = ParamCurve::new(0.0, 1.0, "chord", |t| CVector::real(&[0.5 * t]));
        let cert = certify_quasi_geodesic(&disk_estimator(), &chord, 1.0, 0.0, &[0.3]).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.samples.len(), 1);
    }

    #[test]
    fn normal_curve_errors_and_eps_search() {
        let dom = ball(2, 1.0).unwrap();
        let x = boundary_data(&dom, &CVector::real(&[1.0, 0.0])).unwrap();
        assert!(matches!(normal_curve(&dom, &x, 2.5, 1.0), Err(Error::EpsTooLarge { .. })));
        assert!(matches!(normal_curve(&dom, &x, 0.0, 1.0), Err(Error::EpsTooLarge { .. })));
        assert!((normal_eps(&dom, &x) - 0.5 * dom.bounding_radius()).abs() < 1e-15);
        let small = ball(2, 0.1).unwrap();
        let y = boundary_data(&small, &CVector::real(&[0.1, 0.0])).unwrap();
        let eps = normal_eps(&small, &y);
        assert!(eps <= 0.5 * small.bounding_radius());
        assert!(small.contains(&y.point.axpy(eps, &y.normal)));
    }

    #[test]
    fn ellipsoid_normal_curve_stays_inside() {
        let dom = PolynomialEllipsoid::power(2).unwrap().domain();
        let x = boundary_data(&dom, &CVector::real(&[0.0, 1.0])).unwrap();
        let curve = normal_curve(&dom, &x, 0.1, 6.0).unwrap();
        curve.check_inside(&dom, 200).unwrap();
    }

    #[test]
    fn certification_is_monotone_in_constants() {
        let dom = ball(1, 1.0).unwrap();
        let x = boundary_data(&dom, &CVector::real(&[1.0])).unwrap();
        let curve = normal_curve(&dom, &x, 0.5, 3.0).unwrap();
        let est = disk_estimator();
        let grid = [0.0, 1.0, 2.0, 3.0];
        let mut prev = 0;
        for (a, b) in [(1.0, 0.0), (1.0, 0.2), (1.5, 0.2), (2.0, 1.0)] {
            let cert = certify_quasi_geodesic(&est, &curve, a, b, &grid).unwrap();
            let passes = cert.samples.len() - cert.failures();
            assert!(passes >= prev);
            prev = passes;
        }
    }

    #[test]
    fn four_point_examples() {
        let est = disk_estimator();
        let pts: Vec<CVector> =
            [c(0.0, 0.0), c(0.9, 0.0), c(0.0, 0.9), c(-0.9, 0.0)].iter().map(|&z| CVector::new([z])).collect();
        let rep = four_point_delta(&est, &pts).unwrap();
        assert!(rep.delta <= 2.0, "{rep:?}");
        let same = vec![CVector::real(&[0.3]); 4];
        assert_eq!(four_point_delta(&est, &same).unwrap().delta, 0.0);
        let line: Vec<CVector> = [-0.6, -0.1, 0.3, 0.7, 0.85].iter().map(|&t| CVector::real(&[t])).collect();
        let rep = four_point_delta(&est, &line).unwrap();
        assert!(rep.delta <= rep.slack + 1e-9, "{rep:?}");
        assert!(matches!(four_point_delta(&est, &pts[..3]), Err(Error::TooFewPoints { needed: 4, got: 3 })));
    }

    #[test]
    fn dichotomy_on_ball_grows() {
        let dom = ball(2, 1.0).unwrap();
        let est = DistanceEstimator::with_options(dom.clone(), BracketOptions::fast()).unwrap();
        let x = boundary_data(&dom, &CVector::real(&[1.0, 0.0])).unwrap();
        let rep = product_dichotomy_experiment(&est, &x, &x, &CVector::zeros(2), 6, DichotomyPlan::Diagonal).unwrap();
        assert!(rep.same_tangent);
        let diag = rep.diagonal();
        assert_eq!(diag.len(), 7);
        for w in diag.windows(2).skip(1) {
            assert!(w[1].lower >= w[0].lower - 1e-9);
        }
        let single = product_dichotomy_experiment(&est, &x, &x, &CVector::zeros(2), 0, DichotomyPlan::Grid).unwrap();
        assert_eq!(single.samples.len(), 1);
    }

    #[test]
    fn ball_visibility_paths_pass_near_center() {
        let dom = ball(2, 1.0).unwrap();
        let est = DistanceEstimator::with_options(dom.clone(), BracketOptions::fast()).unwrap();
        let x = boundary_data(&dom, &CVector::real(&[1.0, 0.0])).unwrap();
        let y = boundary_data(&dom, &CVector::real(&[-1.0, 0.0])).unwrap();
        let rep = visibility_probe(&est, &x, &y, 4).unwrap();
        assert_eq!(rep.levels.len(), 4);
        assert!(rep.min_depth() >= 0.5, "{rep:?}");
        assert!(matches!(visibility_probe(&est, &x, &x, 1), Err(Error::SameFace)));
    }

    #[test]
    fn slice_disk_witness_path_is_the_disk_geodesic() {
        // in the unit disk the geodesic between two real points stays on the real axis
        let p = CVector::real(&[-0.5]);
        let q = CVector::real(&[0.7]);
        let w = UpperWitness::SliceDisk { center: CVector::zeros(1), radius: 1.0 };
        let path = witness_path(&p, &q, &w, 9);
        assert!(path[0].distance(&p) < 1e-12 && path[8].distance(&q) < 1e-12);
        assert!(path.iter().all(|z| z[0].im.abs() < 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn four_point_delta_is_permutation_invariant(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let est = disk_estimator();
            let mut rng = crate::numeric::rng(seed);
            let pts: Vec<CVector> = (0..5)
                .map(|k| CVector::new([Complex64::from_polar(0.2 + 0.15 * k as f64, seed as f64 + 1.3 * k as f64)]))
                .collect();
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rng);
            let a = four_point_delta(&est, &pts).unwrap().delta;
            let b = four_point_delta(&est, &shuffled).unwrap().delta;
            prop_assert_eq!(a, b);
        }
    }
}
