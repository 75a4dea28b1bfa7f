use num_complex::Complex64;

use crate::{Error, Result};

/// Poincaré distance on the unit disk, `artanh |(a - b) / (1 - a conj(b))|`.
///
/// This is the normalisation in which the Kobayashi metric of the disk is
/// `|dz| / (1 - |z|^2)`.
pub fn dist_disk(a: Complex64, b: Complex64) -> Result<f64> {
    if !(a.norm() < 1.0) {
        return Err(Error::OutsideDisk(a));
    }
    if !(b.norm() < 1.0) {
        return Err(Error::OutsideDisk(b));
    }
    Ok(disk_unchecked(a, b))
}

pub(crate) fn disk_unchecked(a: Complex64, b: Complex64) -> f64 {
    let num = (a - b).norm();
    if num == 0.0 {
        return 0.0;
    }
    // |1 - a conj(b)|^2 - |a - b|^2 = (1 - |a|^2)(1 - |b|^2); use it to keep precision near the rim.
    let den = (Complex64::new(1.0, 0.0) - a * b.conj()).norm();
    let t = num / den;
    if t < 0.5 {
        t.atanh()
    } else {
        let gap = (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr()) / (den * den);
        // artanh t = 0.5 ln((1 + t)/(1 - t)) with 1 - t = gap / (1 + t)
        0.5 * ((1.0 + t) * (1.0 + t) / gap).ln()
    }
}

/// Poincaré distance on the upper half plane, `arccosh(1 + |a - b|^2 / (2 Im a Im b)) / 2`.
pub fn dist_halfplane(a: Complex64, b: Complex64) -> Result<f64> {
    if !(a.im > 0.0) {
        return Err(Error::OutsideHalfplane(a));
    }
    if !(b.im > 0.0) {
        return Err(Error::OutsideHalfplane(b));
    }
    Ok(halfplane_unchecked(a, b))
}

pub(crate) fn halfplane_unchecked(a: Complex64, b: Complex64) -> f64 {
    let x = (a - b).norm_sqr() / (2.0 * a.im * b.im);
    // arccosh(1 + x) = ln(1 + x + sqrt(x (x + 2))), written via ln_1p for small x
    0.5 * (x + (x * (x + 2.0)).sqrt()).ln_1p()
}
