//! Boundary flatness: vanishing orders along complex lines, line type, weighted
//! homogeneous limit models and anisotropic rescaling toward a model domain.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::geometry::{random_unit, BoundaryPoint, CVector, ComplexHyperplane, ConvexDomain, DefiningFunction};
use crate::geometry::{BOUNDARY_TOL, GRADIENT_FLOOR};
use crate::models::{LinePolynomial, RealPolynomial, Term};
use crate::numeric::{brent_root, nelder_mead, pattern_search, rng, sphere_directions, PatternOptions};
use crate::{Error, Result};

/// Annuli `|zeta| = 2^{-j}` for `j` in this range feed the numeric vanishing order.
const ANNULI: std::ops::RangeInclusive<i32> = 4..=20;
const ANGLES: usize = 64;
/// Allowed spread of the tail log-log slopes, and the rounding margin.
const SLOPE_TOL: f64 = 0.15;
/// Relative size below which a symbolic coefficient counts as zero.
const COEFF_TOL: f64 = 1e-9;
/// `|r(x + zeta v) - r(x)|` below this is treated as rounding noise.
const NOISE_FLOOR: f64 = 1e-13;
const RANDOM_DIRECTIONS: usize = 32;
const KERNEL_TOL: f64 = 1e-4;
const LINE_SEED: u64 = 0x11e_7e5e;
const HAUSDORFF_SEED: u64 = 0x4a05_d0ff;

/// A vanishing order or line type: a finite integer, or "flatter than any cap".
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeValue {
    Finite(u32),
    Infinite,
}

impl TypeValue {
    pub fn finite(self) -> Option<u32> {
        match self {
            TypeValue::Finite(k) => Some(k),
            TypeValue::Infinite => None,
        }
    }

    fn capped(k: u32, cap: u32) -> Self {
        if k > cap {
            TypeValue::Infinite
        } else {
            TypeValue::Finite(k)
        }
    }
}

impl fmt::Display for TypeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeValue::Finite(k) => write!(f, "{k}"),
            TypeValue::Infinite => f.write_str("infinity"),
        }
    }
}

impl Serialize for TypeValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TypeValue::Finite(k) => s.serialize_u32(*k),
            TypeValue::Infinite => s.serialize_str("infinity"),
        }
    }
}

/// A real function of one complex variable, given symbolically or as an oracle.
pub enum LineFunction<'a> {
    Polynomial(&'a LinePolynomial),
    Oracle(&'a dyn Fn(Complex64) -> f64),
}

/// Order of vanishing at `0`.
///
/// Polynomials are read off their coefficients. Oracles are sampled on the annuli
/// `|zeta| = 2^{-j}`, `j = 4..20`; the log2 ratio of successive circle maxima estimates
/// the order, and the result is [`TypeValue::Infinite`] when a slope exceeds `cap` or
/// the slopes never settle.
pub fn vanishing_order(g: LineFunction<'_>, cap: u32) -> Result<TypeValue> {
    match g {
        LineFunction::Polynomial(p) => {
            let c0 = p.real_part().coefficient(0, 0).re;
            if !(c0.abs() <= BOUNDARY_TOL * p.scale().max(1.0)) {
                return Err(Error::NotVanishing { value: c0 });
            }
            Ok(symbolic_order(p, cap))
        }
        LineFunction::Oracle(f) => {
            let g0 = f(Complex64::new(0.0, 0.0));
            if !(g0.abs() <= BOUNDARY_TOL) {
                return Err(Error::NotVanishing { value: g0 });
            }
            Ok(numeric_order(|z| f(z) - g0, cap, 0.0))
        }
    }
}

/// Lowest nonconstant degree carrying a coefficient of the real part.
fn symbolic_order(p: &LinePolynomial, cap: u32) -> TypeValue {
    let real = p.real_part();
    let cut = COEFF_TOL * p.scale().max(1.0);
    real.coefficients()
        .filter(|&((a, b), c)| a + b > 0 && c.norm() > cut)
        .map(|((a, b), _)| a + b)
        .min()
        .map_or(TypeValue::Infinite, |k| TypeValue::capped(k, cap))
}

fn numeric_order<G: Fn(Complex64) -> f64>(g: G, cap: u32, floor: f64) -> TypeValue {
    let maxima: Vec<f64> = ANNULI
        .map(|j| {
            let r = 2f64.powi(-j);
            (0..ANGLES)
                .map(|k| g(Complex64::from_polar(r, (k as f64 + 0.5) * TAU / ANGLES as f64)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut slopes = Vec::new();
    for w in maxima.windows(2) {
        if !(w[0] > floor && w[1] > floor) {
            break;
        }
        slopes.push((w[0] / w[1]).log2());
    }
    if slopes.is_empty() || slopes.iter().any(|&s| s > cap as f64 + 0.5) {
        return TypeValue::Infinite;
    }
    let tail = &slopes[slopes.len().saturating_sub(4)..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let settled = if hi - lo <= SLOPE_TOL {
        tail.iter().sum::<f64>() / tail.len() as f64
    } else if tail[tail.len() - 1] < tail[0] {
        // a lower-order term is taking over at small radii; it decides the order
        tail[tail.len() - 1]
    } else {
        // slopes still climbing: flatter than every power seen
        return TypeValue::Infinite;
    };
    TypeValue::capped(((settled - SLOPE_TOL).ceil() as u32).max(1), cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineTypeMethod {
    Symbolic,
    Numeric,
}

#[derive(Clone, Debug, Serialize)]
pub struct LineTypeResult {
    pub point: BoundaryPoint,
    pub type_value: TypeValue,
    /// The maximising line is `zeta -> base + zeta * direction`.
    pub base: CVector,
    pub direction: CVector,
    pub cap: u32,
    pub method: LineTypeMethod,
    pub directions_tried: usize,
}

/// Inward normal and complex tangent of `{r < 0}` at `x`, without a domain wrapper.
pub fn oracle_boundary_point(oracle: &dyn DefiningFunction, x: &CVector) -> Result<BoundaryPoint> {
    if x.dim() != oracle.dim() {
        return Err(Error::DimensionMismatch { expected: oracle.dim(), got: x.dim() });
    }
    let r = oracle.value(x);
    if !(r.abs() <= BOUNDARY_TOL) {
        return Err(Error::NotOnBoundary { r: r.abs() });
    }
    let g = oracle.gradient(x);
    let norm = g.norm();
    if !(norm >= GRADIENT_FLOOR) {
        return Err(Error::DegenerateGradient { norm });
    }
    let outward = g.scale(1.0 / norm);
    Ok(BoundaryPoint { point: x.clone(), normal: -&outward, tangent: ComplexHyperplane::through(x, &outward)? })
}

/// Line type of `dom` at the boundary point `x`, capped at `cap`.
pub fn line_type(dom: &ConvexDomain, x: &CVector, cap: u32) -> Result<LineTypeResult> {
    oracle_line_type(dom.oracle().as_ref(), x, cap)
}

/// Line type for a bare defining function, which may describe an unbounded set.
///
/// Only complex-tangent lines can vanish to order above one. Candidates are the
/// tangent basis, pairwise combinations, seeded random tangent directions and the
/// kernel of the `|zeta|^2` form on the tangent space, where flatter lines live.
pub fn oracle_line_type(oracle: &dyn DefiningFunction, x: &CVector, cap: u32) -> Result<LineTypeResult> {
    let poly = oracle.polynomial();
    let mut point = oracle_boundary_point(oracle, x)?;
    if poly.is_none() {
        // a tangent that is off by eps adds eps |zeta| to every line, which swamps
        // quartic flatness near the noise floor; sharpen the normal first
        let g = five_point_gradient(oracle, x);
        let outward = g.scale(1.0 / g.norm());
        point.normal = -&outward;
        point.tangent = ComplexHyperplane::through(x, &outward)?;
    }
    let basis = point.tangent.direction_basis();
    let method = if poly.is_some() { LineTypeMethod::Symbolic } else { LineTypeMethod::Numeric };
    let r0 = oracle.value(x);
    let line = |v: &CVector| -> LineOrder<'_> {
        match &poly {
            Some(p) => LineOrder::Symbolic(p.restrict_to_line(x, v)),
            None => {
                let v = v.clone();
                LineOrder::Numeric(Box::new(move |z: Complex64| oracle.value(&x.axpy_c(z, &v)) - r0))
            }
        }
    };

    if basis.is_empty() {
        let v = point.normal.clone();
        let type_value = line(&v).order(cap);
        return Ok(LineTypeResult { point, type_value, base: x.clone(), direction: v, cap, method, directions_tried: 1 });
    }

    let quad = |v: &CVector| line(v).quadratic_coefficient();
    let mut candidates = basis.clone();
    for p in 0..basis.len() {
        for q in p + 1..basis.len() {
            for k in 0..4 {
                let phase = Complex64::from_polar(1.0, k as f64 * TAU / 4.0);
                candidates.extend(basis[p].axpy_c(phase, &basis[q]).normalized());
            }
        }
    }
    let mut rng = rng(LINE_SEED);
    for _ in 0..RANDOM_DIRECTIONS {
        candidates.extend(combine(&basis, &random_unit(basis.len(), &mut rng)).normalized());
    }
    let kernel = levi_kernel(&basis, quad);
    candidates.extend(kernel.iter().cloned());
    if kernel.len() > 1 {
        for _ in 0..8 {
            candidates.extend(combine(&kernel, &random_unit(kernel.len(), &mut rng)).normalized());
        }
    }

    let mut best: Option<(TypeValue, CVector)> = None;
    for v in &candidates {
        let t = line(v).order(cap);
        if best.as_ref().is_none_or(|(b, _)| t > *b) {
            best = Some((t, v.clone()));
        }
        if t == TypeValue::Infinite {
            break;
        }
    }
    let (type_value, direction) = best.expect("tangent space is nonempty");
    Ok(LineTypeResult { point, type_value, base: x.clone(), direction, cap, method, directions_tried: candidates.len() })
}

/// Fourth-order central differences, step `1e-3`.
fn five_point_gradient(oracle: &dyn DefiningFunction, z: &CVector) -> CVector {
    let h = 1e-3;
    let mut out = CVector::zeros(z.dim());
    for j in 0..z.dim() {
        let partial = |e: Complex64| {
            let at = |s: f64| {
                let mut w = z.clone();
                w[j] += e * s;
                oracle.value(&w)
            };
            (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
        };
        out[j] = Complex64::new(partial(Complex64::new(1.0, 0.0)), partial(Complex64::i()));
    }
    out
}

enum LineOrder<'a> {
    Symbolic(LinePolynomial),
    Numeric(Box<dyn Fn(Complex64) -> f64 + 'a>),
}

impl LineOrder<'_> {
    fn order(&self, cap: u32) -> TypeValue {
        match self {
            LineOrder::Symbolic(p) => symbolic_order(p, cap),
            LineOrder::Numeric(g) => numeric_order(g, cap, NOISE_FLOOR),
        }
    }

    /// Coefficient of `|zeta|^2`. Numerically, the circle mean of `g / rho^2` cancels every
    /// `zeta^a conj(zeta)^b` with `a != b` and leaves `c_11 + c_22 rho^2 + ...`; two radii
    /// remove the `rho^2` term.
    fn quadratic_coefficient(&self) -> f64 {
        match self {
            LineOrder::Symbolic(p) => p.real_part().coefficient(1, 1).re,
            LineOrder::Numeric(g) => {
                let n = 16;
                let mean = |rho: f64| {
                    (0..n).map(|k| g(Complex64::from_polar(rho, k as f64 * TAU / n as f64))).sum::<f64>()
                        / (n as f64 * rho * rho)
                };
                (4.0 * mean(1e-3) - mean(2e-3)) / 3.0
            }
        }
    }
}

/// `sum_k c_k b_k` with complex coefficients packed as real pairs.
fn combine(basis: &[CVector], coeffs: &CVector) -> CVector {
    basis.iter().zip(coeffs.iter()).fold(CVector::zeros(basis[0].dim()), |acc, (b, c)| acc.axpy_c(*c, b))
}

/// Near-kernel of the Hermitian form `v -> quad(v)` on `span(basis)`, as unit vectors.
fn levi_kernel<Q: Fn(&CVector) -> f64>(basis: &[CVector], quad: Q) -> Vec<CVector> {
    // real coordinates: e_{2k} = b_k, e_{2k+1} = i b_k
    let real: Vec<CVector> =
        basis.iter().flat_map(|b| [b.clone(), b.scale_c(Complex64::i())]).collect();
    let n = real.len();
    let diag: Vec<f64> = real.iter().map(&quad).collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for p in 0..n {
        s[(p, p)] = diag[p];
        for q in p + 1..n {
            let v = 0.5 * (quad(&(&real[p] + &real[q])) - diag[p] - diag[q]);
            s[(p, q)] = v;
            s[(q, p)] = v;
        }
    }
    let eig = SymmetricEigen::new(s);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let mut out: Vec<CVector> = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > KERNEL_TOL * top.max(1.0) {
            continue;
        }
        let col = eig.eigenvectors.column(k);
        let v = real.iter().zip(col.iter()).fold(CVector::zeros(basis[0].dim()), |acc, (e, &c)| acc.axpy(c, e));
        // the real kernel comes in pairs {v, i v}; keep one per complex direction
        if let Some(u) = v.normalized() {
            if out.iter().all(|w| u.dot(w).norm() < 0.99) {
                out.push(u);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HomogeneousOptions {
    /// Largest weighted degree `sum (alpha_i + beta_i) delta_i` in the fit basis.
    pub max_weight: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for HomogeneousOptions {
    fn default() -> Self {
        Self { max_weight: 1.5, samples: 256, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomogeneousModel {
    pub deltas: Vec<f64>,
    /// Weight-one part of the fit at the smallest `t`.
    pub polynomial: RealPolynomial,
    /// `(t, rms(g_t - P_t))` for decreasing `t`, with `g_t(z) = f(t^delta z) / t`.
    pub residuals: Vec<(f64, f64)>,
    /// Largest `|P(s^delta z) - s P(z)|` over the samples and `s` in `{1/2, 1/10}`.
    pub homogeneity_defect: f64,
}

struct Monomial {
    alpha: Vec<u32>,
    beta: Vec<u32>,
    weight: f64,
}

fn monomials(deltas: &[f64], max_weight: f64) -> Vec<Monomial> {
    let n = deltas.len();
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<(u32, u32)>::new(), 0.0)];
    while let Some((prefix, w)) = stack.pop() {
        if prefix.len() == n {
            let alpha: Vec<u32> = prefix.iter().map(|p| p.0).collect();
            let beta: Vec<u32> = prefix.iter().map(|p| p.1).collect();
            if w > 0.0 && alpha <= beta {
                out.push(Monomial { alpha, beta, weight: w });
            }
            continue;
        }
        let d = deltas[prefix.len()];
        let max_deg = ((max_weight + 1e-9) / d).floor() as u32;
        for a in 0..=max_deg {
            for b in 0..=max_deg - a {
                let w2 = w + (a + b) as f64 * d;
                if w2 <= max_weight + 1e-9 {
                    let mut next = prefix.clone();
                    next.push((a, b));
                    stack.push((next, w2));
                }
            }
        }
    }
    out.sort_by(|x, y| x.weight.total_cmp(&y.weight).then(x.alpha.cmp(&y.alpha)).then(x.beta.cmp(&y.beta)));
    out
}

fn monomial_value(m: &Monomial, z: &CVector) -> Complex64 {
    z.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (j, zj)| {
        acc * zj.powu(m.alpha[j]) * zj.conj().powu(m.beta[j])
    })
}

/// Weighted homogeneous limit `P` of `f(t^{delta_1} z_1, ...) / t` as `t -> 0`.
///
/// At each `t` the rescaled function is fitted by real polynomials of weighted degree
/// at most `max_weight`; `P_t` is the weight-one part. Terms of lower weight blow up
/// and higher ones decay, so the residuals `g_t - P_t` must shrink along the grid.
pub fn homogeneous_model<F>(f: F, deltas: &[f64], t_grid: &[f64], opts: HomogeneousOptions) -> Result<HomogeneousModel>
where
    F: Fn(&CVector) -> f64,
{
    let n = deltas.len();
    if n == 0 || deltas.iter().any(|&d| !(d > 0.0 && d <= 0.5)) {
        return Err(Error::InvalidParameter(format!("weights must lie in (0, 1/2], got {deltas:?}")));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("t grid must be nonempty and positive".into()));
    }
    let f0 = f(&CVector::zeros(n));
    if !(f0.abs() <= BOUNDARY_TOL) {
        return Err(Error::NotVanishing { value: f0 });
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));

    let basis = monomials(deltas, opts.max_weight);
    // real columns: Re m always, Im m for non-diagonal monomials
    let columns: Vec<(usize, bool)> = basis
        .iter()
        .enumerate()
        .flat_map(|(k, m)| if m.alpha == m.beta { vec![(k, false)] } else { vec![(k, false), (k, true)] })
        .collect();
    let n_samples = opts.samples.max(4 * columns.len());
    let mut rng = rng(opts.seed);
    let samples: Vec<CVector> = (0..n_samples)
        .map(|_| {
            CVector::new((0..n).map(|_| {
                let r = rng.random::<f64>().sqrt();
                Complex64::from_polar(r, TAU * rng.random::<f64>())
            }))
        })
        .collect();
    let a = DMatrix::from_fn(n_samples, columns.len(), |i, c| {
        let (k, im) = columns[c];
        let v = monomial_value(&basis[k], &samples[i]);
        if im { v.im } else { v.re }
    });
    let svd = a.clone().svd(true, true);
    let homogeneous: Vec<bool> = columns.iter().map(|&(k, _)| (basis[k].weight - 1.0).abs() < 1e-9).collect();

    let mut residuals = Vec::with_capacity(grid.len());
    let mut last = DVector::zeros(columns.len());
    for &t in &grid {
        let y = DVector::from_iterator(
            n_samples,
            samples.iter().map(|z| {
                let scaled = CVector::new(z.iter().zip(deltas).map(|(zj, d)| zj * t.powf(*d)));
                f(&scaled) / t
            }),
        );
        let coeffs = svd.solve(&y, 1e-12).map_err(|e| Error::NoConvergence(e.to_string()))?;
        let mut kept = coeffs.clone();
        for (c, &h) in kept.iter_mut().zip(&homogeneous) {
            if !h {
                *c = 0.0;
            }
        }
        let rms = ((&y - &a * &kept).norm_squared() / n_samples as f64).sqrt();
        residuals.push((t, rms));
        last = kept;
    }
    for w in residuals.windows(2) {
        if w[1].1 > w[0].1 * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::NoConvergence(format!(
                "residual grows from {:e} at t = {} to {:e} at t = {}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
    }

    let scale = last.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut terms: Vec<Term> = Vec::new();
    for (c, &(k, im)) in columns.iter().enumerate() {
        let v = last[c];
        if !homogeneous[c] || v.abs() <= 1e-10 * scale.max(1.0) {
            continue;
        }
        let m = &basis[k];
        // a Re(m) + b Im(m) = Re((a - i b) m)
        let coeff = if im { Complex64::new(0.0, -v) } else { Complex64::new(v, 0.0) };
        match terms.iter_mut().find(|t| t.alpha == m.alpha && t.beta == m.beta) {
            Some(t) => t.coeff += coeff,
            None => terms.push(Term::new(m.alpha.clone(), m.beta.clone(), coeff)),
        }
    }
    let polynomial = RealPolynomial::new(n, terms);
    let mut defect = 0.0f64;
    for s in [0.5f64, 0.1] {
        for z in &samples {
            let scaled = CVector::new(z.iter().zip(deltas).map(|(zj, d)| zj * s.powf(*d)));
            defect = defect.max((polynomial.eval(scaled.as_slice()) - s * polynomial.eval(z.as_slice())).abs());
        }
    }
    Ok(HomogeneousModel { deltas: deltas.to_vec(), polynomial, residuals, homogeneity_defect: defect })
}

/// Affine chart at a boundary point: `u = k i <z - x, n>` with `n` the inward unit
/// normal and `k = |grad r(x)|`, and `Z_j = <z - x, b_j>` for an orthonormal basis of
/// the complex tangent. The domain sits in `{Im u > 0}` to first order, and
/// `r = -Im u + O(|u|^2 + |Z|^2)`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalChart {
    pub base: CVector,
    pub normal: CVector,
    pub tangent_basis: Vec<CVector>,
    pub scale: f64,
}

impl LocalChart {
    pub fn at(oracle: &dyn DefiningFunction, x: &CVector) -> Result<Self> {
        let bp = oracle_boundary_point(oracle, x)?;
        Ok(Self {
            base: x.clone(),
            tangent_basis: bp.tangent.direction_basis(),
            scale: oracle.gradient(x).norm(),
            normal: bp.normal,
        })
    }

    pub fn to_local(&self, z: &CVector) -> CVector {
        let h = z - &self.base;
        let u = Complex64::new(0.0, self.scale) * h.dot(&self.normal);
        CVector::new(std::iter::once(u).chain(self.tangent_basis.iter().map(|b| h.dot(b))))
    }

    pub fn from_local(&self, u: &CVector) -> CVector {
        let along = u[0] / Complex64::new(0.0, self.scale);
        let mut z = self.base.axpy_c(along, &self.normal);
        for (j, b) in self.tangent_basis.iter().enumerate() {
            z = z.axpy_c(u[j + 1], b);
        }
        z
    }
}

/// `lambda r(chart^{-1}(Lambda^{-1} xi))`, the defining function of `Lambda(chart(Omega))`.
struct ScaledOracle {
    inner: Arc<dyn DefiningFunction>,
    chart: LocalChart,
    diag: Vec<f64>,
}

impl DefiningFunction for ScaledOracle {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn value(&self, xi: &CVector) -> f64 {
        let u = CVector::new(xi.iter().zip(&self.diag).map(|(c, l)| c / l));
        self.diag[0] * self.inner.value(&self.chart.from_local(&u))
    }
    fn describe(&self) -> String {
        format!("rescaled {} (lambda = {:e})", self.inner.describe(), self.diag[0])
    }
}

/// Anisotropic blow-ups of a domain at a boundary point.
#[derive(Clone, Serialize)]
pub struct ScalingSequence {
    pub base_point: BoundaryPoint,
    pub chart: LocalChart,
    pub deltas: Vec<f64>,
    pub times: Vec<f64>,
    /// Diagonal of each map: `(lambda, lambda^{delta_1}, ..., lambda^{delta_{d-1}})`
    /// with `lambda = e^{2 t}`.
    pub maps: Vec<Vec<f64>>,
    #[serde(skip)]
    oracle: Arc<dyn DefiningFunction>,
}

impl fmt::Debug for ScalingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalingSequence").field("deltas", &self.deltas).field("times", &self.times).finish()
    }
}

impl ScalingSequence {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The `n`-th rescaled domain, in chart coordinates.
    pub fn scaled(&self, n: usize) -> Arc<dyn DefiningFunction> {
        Arc::new(ScaledOracle { inner: self.oracle.clone(), chart: self.chart.clone(), diag: self.maps[n].clone() })
    }

    /// The domain in chart coordinates without rescaling.
    pub fn local(&self) -> Arc<dyn DefiningFunction> {
        Arc::new(ScaledOracle { inner: self.oracle.clone(), chart: self.chart.clone(), diag: vec![1.0; self.oracle.dim()] })
    }
}

/// Normalises `{r < 0}` at the boundary point `x` and applies
/// `Lambda_n = diag(lambda_n, lambda_n^{delta_1}, ...)`, `lambda_n = e^{2 t_n}`.
pub fn frankel_scaling(
    oracle: Arc<dyn DefiningFunction>,
    x: &CVector,
    deltas: &[f64],
    times: &[f64],
) -> Result<ScalingSequence> {
    let d = oracle.dim();
    if deltas.len() + 1 != d {
        return Err(Error::DimensionMismatch { expected: d - 1, got: deltas.len() });
    }
    if deltas.iter().any(|&v| !(v > 0.0 && v <= 0.5)) {
        return Err(Error::InvalidParameter(format!("weights must lie in (0, 1/2], got {deltas:?}")));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("scaling times must be finite".into()));
    }
    let base_point = oracle_boundary_point(oracle.as_ref(), x)?;
    let chart = LocalChart::at(oracle.as_ref(), x)?;
    let maps = times
        .iter()
        .map(|t| {
            let lambda = (2.0 * t).exp();
            std::iter::once(lambda).chain(deltas.iter().map(|dl| lambda.powf(*dl))).collect()
        })
        .collect();
    Ok(ScalingSequence { base_point, chart, deltas: deltas.to_vec(), times: times.to_vec(), maps, oracle })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingDiagnostic {
    pub n: usize,
    pub t: f64,
    pub hausdorff: f64,
}

/// Local Hausdorff distance from each rescaled domain to `model` on `ball(0, radius)`.
pub fn scaling_diagnostics(
    seq: &ScalingSequence,
    model: &dyn DefiningFunction,
    radius: f64,
    n_dirs: usize,
) -> Result<Vec<ScalingDiagnostic>> {
    (0..seq.len())
        .map(|n| {
            let h = local_hausdorff_distance(seq.scaled(n).as_ref(), model, radius, n_dirs)?;
            Ok(ScalingDiagnostic { n, t: seq.times[n], hausdorff: h })
        })
        .collect()
}

/// `A ∩ ball(0, radius)` for a convex `A = {r < 0}`, seen from an interior point.
struct CutBody<'a> {
    oracle: &'a dyn DefiningFunction,
    radius: f64,
    center: CVector,
}

impl<'a> CutBody<'a> {
    fn new(oracle: &'a dyn DefiningFunction, radius: f64) -> Result<Self> {
        let d = oracle.dim();
        let mut rng = rng(HAUSDORFF_SEED);
        let mut sum = CVector::zeros(d);
        let mut count = 0usize;
        for _ in 0..4096 {
            let s = radius * rng.random::<f64>().powf(1.0 / (2 * d) as f64);
            let z = random_unit(d, &mut rng).scale(s);
            if z.norm() < radius && oracle.value(&z) < 0.0 {
                sum = &sum + &z;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyIntersection);
        }
        let center = sum.scale(1.0 / count as f64);
        if !(oracle.value(&center) < 0.0) {
            return Err(Error::EmptyIntersection);
        }
        Ok(Self { oracle, radius, center })
    }

    /// Distance from the center to the boundary of the cut body along the unit `theta`.
    fn radial(&self, theta: &CVector) -> f64 {
        let b = self.center.real_dot(theta);
        let s_ball = -b + (b * b - self.center.norm_sqr() + self.radius * self.radius).max(0.0).sqrt();
        let f = |s: f64| self.oracle.value(&self.center.axpy(s, theta));
        let f_ball = f(s_ball);
        if f_ball < 0.0 {
            return s_ball;
        }
        brent_root(f, 0.0, s_ball, f(0.0), f_ball, 1e-15)
    }

    fn support(&self, u: &CVector, starts: &[CVector]) -> f64 {
        // the test ball's own support point, when it lies in A, is optimal
        let top = u.scale(self.radius);
        if self.oracle.value(&top) <= 0.0 {
            return self.radius;
        }
        let objective = |raw: &[f64]| -> f64 {
            let Some(theta) = CVector::from_real(raw).normalized() else { return f64::INFINITY };
            -self.center.axpy(self.radial(&theta), &theta).real_dot(u)
        };
        let (mut x0, mut best) = (u.to_real(), objective(&u.to_real()));
        for s in starts {
            let v = objective(&s.to_real());
            if v < best {
                best = v;
                x0 = s.to_real();
            }
        }
        let mut step = 0.1;
        for round in 0..2u64 {
            let opts = PatternOptions {
                initial_step: step,
                min_step: 1e-12,
                max_evals: 4000,
                rotate_seed: Some(HAUSDORFF_SEED + round),
            };
            let (x, v) = pattern_search(objective, &x0, opts);
            if v < best {
                best = v;
                x0 = x;
            }
            step *= 0.01;
        }
        let mut h = -best;
        if let Some(theta) = CVector::from_real(&x0).normalized() {
            let y = self.center.axpy(self.radial(&theta), &theta);
            if y.norm() > self.radius * (1.0 - 1e-3) {
                h = h.max(self.ridge_support(&y.scale(self.radius / y.norm()), u));
            }
        }
        h
    }

    /// Maximum of `<y, u>` over the ridge `{|y| = radius, r(y) = 0}` near `y0`.
    ///
    /// Points of the ridge belong to the cut body, so any value found is a valid lower
    /// bound for the support; on the ridge the objective is smooth, unlike the radial
    /// parametrisation whose maximum sits on a kink there.
    fn ridge_support(&self, y0: &CVector, u: &CVector) -> f64 {
        let d = y0.dim();
        let e = y0.scale(1.0 / self.radius);
        let g = self.oracle.gradient(y0);
        let Some(nr) = g.axpy(-g.real_dot(&e), &e).normalized() else { return f64::NEG_INFINITY };
        let mut frame = vec![e, nr.clone()];
        let mut tangent = Vec::new();
        for k in 0..2 * d {
            let mut v = CVector::basis(d, k / 2);
            if k % 2 == 1 {
                v = v.scale_c(Complex64::i());
            }
            for _ in 0..2 {
                for f in &frame {
                    v = v.axpy(-v.real_dot(f), f);
                }
            }
            if v.norm() > 1e-6 {
                let v = v.scale(1.0 / v.norm());
                frame.push(v.clone());
                tangent.push(v);
            }
        }
        let on_sphere = |a: &[f64], s: f64| -> CVector {
            let mut y = y0.axpy(s, &nr);
            for (t, &c) in tangent.iter().zip(a) {
                y = y.axpy(c, t);
            }
            y.scale(self.radius / y.norm())
        };
        let lift = |a: &[f64]| -> Option<CVector> {
            let f = |s: f64| self.oracle.value(&on_sphere(a, s));
            let mut h = 1e-6 * self.radius;
            while h < self.radius {
                let (flo, fhi) = (f(-h), f(h));
                if flo < 0.0 && fhi > 0.0 {
                    return Some(on_sphere(a, brent_root(f, -h, h, flo, fhi, 1e-15)));
                }
                h *= 4.0;
            }
            None
        };
        let value = |a: &[f64]| lift(a).map_or(f64::INFINITY, |y| -y.real_dot(u));
        let zero = vec![0.0; tangent.len()];
        if tangent.is_empty() {
            return -value(&zero);
        }
        let (_, v) = nelder_mead(value, &zero, 1e-2 * self.radius, 1e-16, 600);
        -v
    }
}

/// Symmetric Hausdorff distance between `A ∩ ball(0, radius)` and `B ∩ ball(0, radius)`
/// for convex `A`, `B`, as the largest support-function gap over a fixed direction set.
pub fn local_hausdorff_distance(
    a: &dyn DefiningFunction,
    b: &dyn DefiningFunction,
    radius: f64,
    n_dirs: usize,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if !(radius > 0.0 && radius.is_finite()) || n_dirs == 0 {
        return Err(Error::InvalidParameter("test radius and direction count must be positive".into()));
    }
    let d = a.dim();
    let (body_a, body_b) = (CutBody::new(a, radius)?, CutBody::new(b, radius)?);
    let mut dirs: Vec<CVector> = (0..2 * d)
        .flat_map(|k| {
            let mut e = vec![0.0; 2 * d];
            e[k] = 1.0;
            let plus = CVector::from_real(&e);
            [plus.clone(), -&plus]
        })
        .collect();
    dirs.extend(sphere_directions(2 * d, n_dirs, HAUSDORFF_SEED).iter().map(|v| CVector::from_real(v)));
    let starts: Vec<CVector> = sphere_directions(2 * d, 32, HAUSDORFF_SEED ^ 1).iter().map(|v| CVector::from_real(v)).collect();
    let gaps: Vec<f64> =
        dirs.par_iter().map(|u| (body_a.support(u, &starts) - body_b.support(u, &starts)).abs()).collect();
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
