use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CVector, ComplexHyperplane, ConvexDomain, BOUNDARY_TOL, GRADIENT_FLOOR};
use crate::numeric::{golden_min, pattern_search, rng, sphere_directions, PatternOptions};
use crate::{Error, Result};

/// Fixed seed for the internal direction sets so every query is reproducible.
const DIRECTION_SEED: u64 = 0x6b6f_6261_6c74;
/// Directions per real dimension when scanning for the nearest boundary point.
const OVERSAMPLING: usize = 16;
const THETA_GRID: usize = 24;

/// A boundary point together with its inward unit normal and complex tangent hyperplane.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: CVector,
    pub normal: CVector,
    pub tangent: ComplexHyperplane,
}

/// Result of a complex-line boundary query.
#[derive(Clone, Debug)]
pub struct DirectionalHit {
    /// `delta(p; v)`.
    pub distance: f64,
    /// Boundary point realising it.
    pub point: CVector,
    /// Unit vector `e^{i theta} v / |v|` pointing from `p` to `point`.
    pub direction: CVector,
}

/// Euclidean distance from an interior point to the boundary.
pub fn boundary_distance(dom: &ConvexDomain, p: &CVector) -> Result<f64> {
    nearest_boundary_point(dom, p).map(|(d, _)| d)
}

/// Nearest boundary point to `p` and its distance.
///
/// Scans `2d * 16` seeded ray directions plus the coordinate axes, then polishes the
/// three best with a rotating compass search on the sphere of directions.
pub fn nearest_boundary_point(dom: &ConvexDomain, p: &CVector) -> Result<(f64, CVector)> {
    dom.require_interior(p)?;
    let n = 2 * dom.dim();
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut dirs = sphere_directions(n, n * OVERSAMPLING, DIRECTION_SEED);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            dirs.push(e);
        }
    }
    for dir in dirs {
        let t = dom.ray_exit(p, &CVector::from_real(&dir))?;
        candidates.push((t, dir));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ray = |x: &[f64]| -> f64 {
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        let u: Vec<f64> = x.iter().map(|a| a / norm).collect();
        dom.ray_exit(p, &CVector::from_real(&u)).unwrap_or(f64::INFINITY)
    };
    let mut best = (f64::INFINITY, Vec::new());
    for (k, (_, start)) in candidates.iter().take(3).enumerate() {
        let (x, fx) = pattern_search(
            ray,
            start,
            PatternOptions {
                initial_step: 0.15,
                min_step: 1e-7,
                max_evals: 3000,
                rotate_seed: Some(DIRECTION_SEED + k as u64),
            },
        );
        if fx < best.0 {
            best = (fx, x);
        }
    }
    let norm = best.1.iter().map(|a| a * a).sum::<f64>().sqrt();
    let u = CVector::from_real(&best.1).scale(1.0 / norm);
    Ok((best.0, p.axpy(best.0, &u)))
}

/// Distance from `p` to the boundary inside the complex line `p + C v`.
pub fn directional_boundary_distance(dom: &ConvexDomain, p: &CVector, v: &CVector) -> Result<DirectionalHit> {
    dom.require_interior(p)?;
    dom.check_dim(v)?;
    let vhat = v.normalized().ok_or(Error::ZeroDirection)?;
    let ray = |theta: f64| -> f64 {
        let u = vhat.scale_c(Complex64::from_polar(1.0, theta));
        dom.ray_exit(p, &u).unwrap_or(f64::INFINITY)
    };
    let h = std::f64::consts::TAU / THETA_GRID as f64;
    let grid: Vec<f64> = (0..THETA_GRID).map(|k| ray(k as f64 * h)).collect();
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..THETA_GRID {
        let prev = grid[(k + THETA_GRID - 1) % THETA_GRID];
        let next = grid[(k + 1) % THETA_GRID];
        if grid[k] <= prev && grid[k] <= next {
            let centre = k as f64 * h;
            let (theta, val) = golden_min(ray, centre - h, centre + h, 1e-7);
            if val < best.0 {
                best = (val, theta);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::BracketFailure);
    }
    let direction = vhat.scale_c(Complex64::from_polar(1.0, best.1));
    Ok(DirectionalHit { distance: best.0, point: p.axpy(best.0, &direction), direction })
}

/// Inward normal and complex tangent hyperplane at a boundary point.
pub fn boundary_data(dom: &ConvexDomain, x: &CVector) -> Result<BoundaryPoint> {
    dom.check_dim(x)?;
    let r = dom.value(x);
    if !(r.abs() <= BOUNDARY_TOL) {
        return Err(Error::NotOnBoundary { r: r.abs() });
    }
    boundary_data_unchecked(dom, x)
}

pub(crate) fn boundary_data_unchecked(dom: &ConvexDomain, x: &CVector) -> Result<BoundaryPoint> {
    let g = dom.gradient(x);
    let norm = g.norm();
    if !(norm >= GRADIENT_FLOOR) {
        return Err(Error::DegenerateGradient { norm });
    }
    let outward = g.scale(1.0 / norm);
    Ok(BoundaryPoint {
        point: x.clone(),
        normal: -&outward,
        tangent: ComplexHyperplane::through(x, &outward)?,
    })
}

impl ComplexHyperplane {
    /// Same complex hyperplane: normals agree up to a unimodular factor and the
    /// offsets match after aligning that factor.
    pub fn coincides(&self, other: &ComplexHyperplane, tol: f64) -> bool {
        let lambda = other.normal.dot(&self.normal);
        let modulus = lambda.norm();
        if modulus < 1.0 - tol || modulus == 0.0 {
            return false;
        }
        let phase = lambda / modulus;
        (self.offset - phase * other.offset).norm() <= tol
    }
}

/// Whether two boundary points have the same complex tangent hyperplane.
pub fn same_complex_tangent(a: &BoundaryPoint, b: &BoundaryPoint, tol: f64) -> bool {
    a.tangent.coincides(&b.tangent, tol)
}

/// Seeded sample of complex tangent hyperplanes; hyperplanes that meet the domain
/// (min of `r` over the hyperplane below `-BOUNDARY_TOL`) are dropped.
pub fn supporting_hyperplanes(dom: &ConvexDomain, n_samples: usize, seed: u64) -> Result<Vec<ComplexHyperplane>> {
    let mut out = Vec::with_capacity(n_samples);
    for (k, dir) in sphere_directions(2 * dom.dim(), n_samples, seed).into_iter().enumerate() {
        let x = dom.boundary_point_towards(&CVector::from_real(&dir))?;
        let bp = match boundary_data_unchecked(dom, &x) {
            Ok(bp) => bp,
            Err(Error::DegenerateGradient { .. }) => continue,
            Err(e) => return Err(e),
        };
        if hyperplane_min_defining_value(dom, &bp.tangent, seed.wrapping_add(k as u64)) >= -BOUNDARY_TOL {
            out.push(bp.tangent);
        }
    }
    Ok(out)
}

/// Minimum of the defining function over `H` intersected with twice the bounding ball,
/// by random sampling plus a compass-search polish.
pub fn hyperplane_min_defining_value(dom: &ConvexDomain, h: &ComplexHyperplane, seed: u64) -> f64 {
    let base = h.normal.scale_c(h.offset);
    let basis = h.direction_basis();
    if basis.is_empty() {
        return dom.value(&base);
    }
    let point_at = |c: &[f64]| -> CVector {
        let mut z = base.clone();
        for (k, e) in basis.iter().enumerate() {
            z = z.axpy_c(Complex64::new(c[2 * k], c[2 * k + 1]), e);
        }
        z
    };
    let radius = 2.0 * dom.bounding_radius();
    let mut rng = rng(seed);
    let m = 2 * basis.len();
    let mut best = (dom.value(&base), vec![0.0; m]);
    for _ in 0..64 {
        let c: Vec<f64> = (0..m).map(|_| radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let v = dom.value(&point_at(&c));
        if v < best.0 {
            best = (v, c);
        }
    }
    let (_, fx) = pattern_search(
        |c| dom.value(&point_at(c)),
        &best.1,
        PatternOptions { initial_step: 0.1 * radius, min_step: 1e-9, max_evals: 2000, rotate_seed: Some(seed) },
    );
    fx.min(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ball, flat_face_domain, PolynomialEllipsoid, WeightedPolynomial};
    use rand::Rng;

    fn quartic() -> ConvexDomain {
        PolynomialEllipsoid::new(WeightedPolynomial::monomial_power(2).unwrap()).unwrap().domain()
    }

    #[test]
    fn ball_distances() {
        let b1 = ball(1, 1.0).unwrap();
        assert!((boundary_distance(&b1, &CVector::zeros(1)).unwrap() - 1.0).abs() < 1e-9);
        let b2 = ball(2, 1.0).unwrap();
        let d = boundary_distance(&b2, &CVector::real(&[0.5, 0.0])).unwrap();
        assert!((d - 0.5).abs() < 1e-7, "{d}");
    }

    /// Dense boundary sampling oracle: min over a fine grid of boundary points of `|x - p|`.
    fn brute_force_boundary_distance(dom: &ConvexDomain, p: &CVector, n: usize) -> f64 {
        // Exploit the (w, z) -> (|w|, |z|) symmetry of the quartic ellipsoid: the boundary is
        // {|w|^2 + |z|^4 = 1}; for p real the nearest point has w, z real of matching sign.
        let _ = dom;
        let mut best = f64::INFINITY;
        for k in 0..=n {
            let s = k as f64 / n as f64; // |z|
            let w = (1.0 - s.powi(4)).sqrt();
            for (ws, zs) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let x = CVector::real(&[ws * w, zs * s]);
                best = best.min(x.distance(p));
            }
        }
        best
    }

    #[test]
    fn quartic_ellipsoid_distance_matches_dense_sampling() {
        let dom = quartic();
        let p = CVector::real(&[0.9, 0.0]);
        let oracle = brute_force_boundary_distance(&dom, &p, 400_000);
        let d = boundary_distance(&dom, &p).unwrap();
        assert!((d - oracle).abs() < 1e-4, "{d} vs {oracle}");
    }

    #[test]
    fn directional_distance_examples() {
        let b = ball(2, 1.0).unwrap();
        let h = directional_boundary_distance(&b, &CVector::zeros(2), &CVector::real(&[1.0, 0.0])).unwrap();
        assert!((h.distance - 1.0).abs() < 1e-12);
        let h = directional_boundary_distance(&b, &CVector::real(&[0.5, 0.0]), &CVector::real(&[0.0, 1.0])).unwrap();
        assert!((h.distance - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn directional_distance_dominates_boundary_distance() {
        let dom = quartic();
        let mut rng = rng(7);
        for _ in 0..100 {
            let p = dom.sample_interior(&mut rng).unwrap();
            let v = CVector::from_real(&(0..4).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<_>>());
            let d = boundary_distance(&dom, &p).unwrap();
            let dv = directional_boundary_distance(&dom, &p, &v).unwrap().distance;
            assert!(d <= dv * (1.0 + 1e-9), "{d} > {dv}");
        }
    }

    #[test]
    fn outside_and_zero_direction_errors() {
        let b = ball(2, 1.0).unwrap();
        assert!(matches!(
            boundary_distance(&b, &CVector::real(&[1.5, 0.0])),
            Err(Error::PointOutsideDomain { .. })
        ));
        assert!(matches!(
            directional_boundary_distance(&b, &CVector::zeros(2), &CVector::zeros(2)),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn boundary_data_examples() {
        let b = ball(2, 1.0).unwrap();
        let bp = boundary_data(&b, &CVector::real(&[1.0, 0.0])).unwrap();
        assert!(bp.normal.distance(&CVector::real(&[-1.0, 0.0])) < 1e-12);
        let expected = ComplexHyperplane::through(&CVector::real(&[1.0, 0.0]), &CVector::real(&[1.0, 0.0])).unwrap();
        assert!(bp.tangent.coincides(&expected, 1e-12));

        let q = quartic();
        let bp = boundary_data(&q, &CVector::real(&[0.0, 1.0])).unwrap();
        let expected = ComplexHyperplane::through(&CVector::real(&[0.0, 1.0]), &CVector::real(&[0.0, 1.0])).unwrap();
        assert!(bp.tangent.coincides(&expected, 1e-12));

        let ff = flat_face_domain(0.5).unwrap();
        let bp = boundary_data(&ff, &CVector::real(&[1.0, 0.3])).unwrap();
        let w1 = ComplexHyperplane::through(&CVector::real(&[1.0, 0.0]), &CVector::real(&[1.0, 0.0])).unwrap();
        assert!(bp.tangent.coincides(&w1, 1e-12));

        assert!(matches!(boundary_data(&b, &CVector::real(&[0.5, 0.0])), Err(Error::NotOnBoundary { .. })));
    }

    #[test]
    fn boundary_normal_matches_finite_differences() {
        let q = quartic();
        for dir in sphere_directions(4, 20, 3) {
            let x = q.boundary_point_towards(&CVector::from_real(&dir)).unwrap();
            let bp = boundary_data(&q, &x).unwrap();
            let fd = super::super::domain::central_difference_gradient(|z| q.value(z), &x);
            let fd_normal = fd.scale(-1.0 / fd.norm());
            assert!(fd_normal.distance(&bp.normal) < 1e-5);
        }
    }

    #[test]
    fn same_tangent_examples() {
        let b = ball(2, 1.0).unwrap();
        let x = boundary_data(&b, &CVector::real(&[1.0, 0.0])).unwrap();
        let y = boundary_data(&b, &CVector::real(&[0.0, 1.0])).unwrap();
        assert!(same_complex_tangent(&x, &x, 1e-9));
        assert!(!same_complex_tangent(&x, &y, 1e-9));

        let ff = flat_face_domain(0.5).unwrap();
        let a = boundary_data(&ff, &CVector::real(&[1.0, 0.2])).unwrap();
        let c = boundary_data(&ff, &CVector::real(&[1.0, -0.2])).unwrap();
        assert!(same_complex_tangent(&a, &c, 1e-9));
        assert!(same_complex_tangent(&c, &a, 1e-9));
    }

    #[test]
    fn supporting_hyperplanes_on_ball_are_sphere_tangents() {
        let b = ball(2, 1.0).unwrap();
        let hs = supporting_hyperplanes(&b, 8, 11).unwrap();
        assert_eq!(hs.len(), 8);
        for h in &hs {
            // tangent {<z, x> = 1} at the unit vector x = normal
            assert!((h.offset - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn quartic_tangent_is_disjoint() {
        let q = quartic();
        let bp = boundary_data(&q, &CVector::real(&[0.0, 1.0])).unwrap();
        assert!(hyperplane_min_defining_value(&q, &bp.tangent, 5) >= -1e-8);
        for h in supporting_hyperplanes(&q, 16, 2).unwrap() {
            assert!(hyperplane_min_defining_value(&q, &h, 9) >= -1e-8);
        }
    }

    #[test]
    fn cutting_hyperplane_is_detected() {
        let b = ball(2, 1.0).unwrap();
        let h = ComplexHyperplane::through(&CVector::real(&[0.5, 0.0]), &CVector::real(&[1.0, 0.0])).unwrap();
        assert!(hyperplane_min_defining_value(&b, &h, 1) < -0.5);
    }
}
