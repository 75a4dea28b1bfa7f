//! Exact Poincaré formulas and two-sided Kobayashi distance brackets.

mod estimator;
mod exact;

pub use estimator::{
    combine_product, halfplane_bound, hyperplane_log_bound, BracketOptions, DistanceEstimator, DistanceInterval,
    LowerBound, LowerWitness, MetricSample, UpperBound, UpperWitness,
};
pub use exact::{dist_disk, dist_halfplane};

use crate::geometry::{CVector, ComplexHyperplane, ConvexDomain};
use crate::Result;

/// Infinitesimal bounds with default settings; builds a fresh estimator.
pub fn infinitesimal_bounds(dom: &ConvexDomain, p: &CVector, v: &CVector) -> Result<MetricSample> {
    DistanceEstimator::new(dom.clone())?.infinitesimal(p, v)
}

pub fn upper_distance(dom: &ConvexDomain, p: &CVector, q: &CVector) -> Result<UpperBound> {
    DistanceEstimator::new(dom.clone())?.upper(p, q)
}

pub fn lower_distance(
    dom: &ConvexDomain,
    p: &CVector,
    q: &CVector,
    hyperplanes: &[ComplexHyperplane],
) -> Result<LowerBound> {
    let opts = BracketOptions { hyperplane_samples: 0, ..BracketOptions::default() };
    DistanceEstimator::with_options(dom.clone(), opts)?.lower_with(p, q, hyperplanes)
}

pub fn distance_interval(dom: &ConvexDomain, p: &CVector, q: &CVector) -> Result<DistanceInterval> {
    DistanceEstimator::new(dom.clone())?.interval(p, q)
}

pub fn gromov_product_interval(dom: &ConvexDomain, o: &CVector, p: &CVector, q: &CVector) -> Result<DistanceInterval> {
    DistanceEstimator::new(dom.clone())?.gromov_product(o, p, q)
}
