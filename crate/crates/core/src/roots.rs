//! Scalar root finding and one-dimensional maximization.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a function whose sign changes over the
/// bracket. Stops when the bracket is narrower than `tol` or after 200
/// halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal function on
/// `[lo, hi]`. Returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    // the endpoints of the original bracket are never evaluated above, so
    // the caller handles boundary maxima by passing a bracket that covers them
    (mid, fm)
}

/// Golden-section maximization on an interval, also checking the two
/// endpoints so that boundary maxima of monotone objectives are found.
pub fn golden_max_closed<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let flo = f(lo);
    let fhi = f(hi);
    let (x, fx) = golden_max(&mut f, lo, hi, tol);
    let mut best = (x, fx);
    if flo > best.1 {
        best = (lo, flo);
    }
    if fhi > best.1 {
        best = (hi, fhi);
    }
    best
}
