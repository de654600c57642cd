//! Safeguarded Newton iteration for increasing scalar functions.

use crate::{Error, Result};

const MAX_ITER: usize = 200;

/// Solves `f(t) = target` for an increasing `f` on the bracket `[lo, hi]`
/// with `f(lo) <= target <= f(hi)`.
///
/// `eval` returns `(f(t), f'(t))`. Newton steps are taken while they stay
/// inside the current bracket; otherwise the bracket is bisected. Returns the
/// root together with the final residual `|f(t) - target|`.
pub(crate) fn solve_increasing<F>(eval: F, target: f64, mut lo: f64, mut hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = eval(lo);
    let (fhi, _) = eval(hi);
    if flo == target {
        return Ok((lo, 0.0));
    }
    if fhi == target {
        return Ok((hi, 0.0));
    }
    if !(flo < target && target < fhi) {
        return Err(Error::Numeric(format!("root of target {target} not bracketed by [{flo}, {fhi}]")));
    }
    // Linear interpolation is a good first guess for near-linear maps.
    let mut t = lo + (hi - lo) * (target - flo) / (fhi - flo);
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }
    let mut best = (t, f64::INFINITY);
    for _ in 0..MAX_ITER {
        let (ft, dt) = eval(t);
        let r = ft - target;
        if r.abs() < best.1 {
            best = (t, r.abs());
        }
        if r == 0.0 {
            return Ok((t, 0.0));
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            return Ok(best);
        }
        let newton = t - r / dt;
        let next = if dt > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == t {
            return Ok(best);
        }
        t = next;
    }
    if best.1.is_finite() {
        Ok(best)
    } else {
        Err(Error::Numeric("safeguarded Newton did not converge".into()))
    }
}
