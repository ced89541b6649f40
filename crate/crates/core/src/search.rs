//! One-dimensional search: bracketed bisection and golden-section maximization.

use crate::error::{ModelError, Result};
use crate::scalar::{lit, to_f64, Real};

/// Finds a root of `f` on `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (a zero endpoint is returned as is).
/// Stops once the bracket is narrower than `x_tol`.
pub fn bisect<T: Real, F>(mut f: F, mut lo: T, mut hi: T, x_tol: T, max_iter: usize) -> Result<T>
where
    F: FnMut(T) -> T,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.is_sign_positive() == f_hi.is_sign_positive() {
        return Err(ModelError::invalid(
            "bracket",
            format!(
                "f({}) = {} and f({}) = {} share a sign",
                to_f64(lo),
                to_f64(f_lo),
                to_f64(hi),
                to_f64(f_hi)
            ),
        ));
    }
    let half = lit::<T>(0.5);
    for _ in 0..max_iter {
        let mid = lo + (hi - lo) * half;
        if hi - lo <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if f_mid.is_sign_positive() == f_lo.is_sign_positive() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(ModelError::NoConvergence {
        solver: "bisection",
        iterations: max_iter,
        residual: to_f64(hi - lo),
    })
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`.
pub fn golden_max<T: Real, F>(mut f: F, mut lo: T, mut hi: T, x_tol: T) -> (T, T)
where
    F: FnMut(T) -> T,
{
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) * lit(0.5);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // Each step shrinks the bracket by ~0.618; 400 steps cover any f64 range.
    for _ in 0..400 {
        if hi - lo <= x_tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best_f {
            best_x = x;
            best_f = fx;
        }
    }
    (best_x, best_f)
}

/// Maximizes `f` on `[lo, hi]` with a uniform scan of `points` samples followed by
/// golden-section refinement inside the bracket around the best sample.
///
/// Ties in the scan resolve to the larger abscissa.
pub fn scan_then_golden<T: Real, F>(mut f: F, lo: T, hi: T, points: usize, x_tol: T) -> (T, T)
where
    F: FnMut(T) -> T,
{
    assert!(points >= 2, "scan needs at least two points");
    let step = (hi - lo) / lit::<T>((points - 1) as f64);
    let at = |i: usize| {
        if i == points - 1 {
            hi
        } else {
            lo + step * lit::<T>(i as f64)
        }
    };
    let mut best_i = 0;
    let mut best_f = f(lo);
    for i in 1..points {
        let fx = f(at(i));
        if fx >= best_f {
            best_i = i;
            best_f = fx;
        }
    }
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(points - 1));
    let (x, fx) = golden_max(&mut f, a, b, x_tol);
    if fx > best_f {
        (x, fx)
    } else {
        (at(best_i), best_f)
    }
}
