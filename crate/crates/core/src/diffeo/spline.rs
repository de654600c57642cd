//! Monotone piecewise-cubic Hermite diffeomorphisms of `[0, 1]`.
//!
//! Interior slopes follow the Fritsch-Carlson rule: start from the average of
//! adjacent secants, then shrink `(alpha, beta) = (m_k, m_{k+1}) / delta_k`
//! into the disc of radius 3 on every segment. End slopes are pinned by the
//! caller and never rescaled.

use super::solve::solve_increasing;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    // Per segment: a = 3*delta - 2*m0 - m1, b = m0 + m1 - 2*delta.
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Spline {
    /// Builds the spline through `knots` with pinned end slopes.
    pub fn new(knots: &[(f64, f64)], start_slope: f64, end_slope: f64) -> Result<Self> {
        let n = knots.len();
        if n < 2 {
            return Err(Error::Construction("spline needs at least two knots".into()));
        }
        if knots[0] != (0.0, 0.0) || knots[n - 1] != (1.0, 1.0) {
            return Err(Error::Construction("spline knots must start at (0,0) and end at (1,1)".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                return Err(Error::Construction(format!(
                    "knots must be strictly increasing in both coordinates: ({}, {}) -> ({}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        if !(start_slope > 0.0 && end_slope > 0.0) || !start_slope.is_finite() || !end_slope.is_finite() {
            return Err(Error::Construction("end slopes must be positive".into()));
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let secants: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])).collect();

        let mut slopes = vec![0.0; n];
        slopes[0] = start_slope;
        slopes[n - 1] = end_slope;
        for k in 1..n - 1 {
            slopes[k] = 0.5 * (secants[k - 1] + secants[k]);
        }

        for k in 0..n - 1 {
            let d = secants[k];
            let alpha = slopes[k] / d;
            let beta = slopes[k + 1] / d;
            let r2 = alpha * alpha + beta * beta;
            if r2 <= 9.0 {
                continue;
            }
            let left_pinned = k == 0;
            let right_pinned = k + 1 == n - 1;
            match (left_pinned, right_pinned) {
                (false, false) => {
                    let tau = 3.0 / r2.sqrt();
                    slopes[k] = tau * alpha * d;
                    slopes[k + 1] = tau * beta * d;
                }
                (true, false) => {
                    if alpha >= 3.0 {
                        return Err(non_monotone(k, "start slope"));
                    }
                    slopes[k + 1] = (9.0 - alpha * alpha).sqrt() * d;
                }
                (false, true) => {
                    if beta >= 3.0 {
                        return Err(non_monotone(k, "end slope"));
                    }
                    slopes[k] = (9.0 - beta * beta).sqrt() * d;
                }
                (true, true) => return Err(non_monotone(k, "pinned slopes")),
            }
        }

        let mut a = Vec::with_capacity(n - 1);
        let mut b = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            let (m0, m1, d) = (slopes[k], slopes[k + 1], secants[k]);
            a.push(3.0 * d - 2.0 * m0 - m1);
            b.push(m0 + m1 - 2.0 * d);
        }
        let spline = Self { xs, ys, slopes, a, b };
        let (lo, _) = spline.deriv_range(0.0, 1.0);
        if !(lo > 0.0) {
            return Err(Error::Construction(format!("spline derivative reaches {lo}, not a diffeomorphism")));
        }
        Ok(spline)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn start_slope(&self) -> f64 {
        self.slopes[0]
    }

    pub fn end_slope(&self) -> f64 {
        self.slopes[self.slopes.len() - 1]
    }

    fn segment_of_x(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&k| k <= x);
        k.saturating_sub(1).min(self.xs.len() - 2)
    }

    fn segment_of_y(&self, y: f64) -> usize {
        let k = self.ys.partition_point(|&k| k <= y);
        k.saturating_sub(1).min(self.ys.len() - 2)
    }

    #[inline]
    fn local(&self, k: usize, t: f64) -> (f64, f64) {
        let h = self.xs[k + 1] - self.xs[k];
        let (m0, a, b) = (self.slopes[k], self.a[k], self.b[k]);
        let value = self.ys[k] + h * t * (m0 + t * (a + t * b));
        let deriv = m0 + t * (2.0 * a + 3.0 * b * t);
        (value, deriv)
    }

    /// Value and derivative at `x` in `[0, 1]`. Knots are reproduced exactly.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let k = self.segment_of_x(x);
        if x == self.xs[k] {
            return (self.ys[k], self.slopes[k]);
        }
        if x == self.xs[k + 1] {
            return (self.ys[k + 1], self.slopes[k + 1]);
        }
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.local(k, t)
    }

    /// Inverse value at `y`; knots map back exactly.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let k = self.segment_of_y(y);
        if y == self.ys[k] {
            return Ok(self.xs[k]);
        }
        if y == self.ys[k + 1] {
            return Ok(self.xs[k + 1]);
        }
        let h = self.xs[k + 1] - self.xs[k];
        let (t, residual) = solve_increasing(
            |t| {
                let (v, d) = self.local(k, t);
                (v, d * h)
            },
            y,
            0.0,
            1.0,
        )?;
        if residual > 1e-12 {
            return Err(Error::Numeric(format!("spline inverse at {y} left residual {residual}")));
        }
        Ok(self.xs[k] + h * t)
    }

    /// Exact range of the derivative over `[lo, hi]` (the derivative is a
    /// quadratic on each segment).
    pub fn deriv_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let first = self.segment_of_x(lo);
        let last = self.segment_of_x(hi);
        for k in first..=last {
            let h = self.xs[k + 1] - self.xs[k];
            let t0 = ((lo - self.xs[k]) / h).clamp(0.0, 1.0);
            let t1 = ((hi - self.xs[k]) / h).clamp(0.0, 1.0);
            let mut probe = |t: f64| {
                let d = self.local(k, t).1;
                min = min.min(d);
                max = max.max(d);
            };
            probe(t0);
            probe(t1);
            let b = self.b[k];
            if b != 0.0 {
                let ts = -self.a[k] / (3.0 * b);
                if ts > t0 && ts < t1 {
                    probe(ts);
                }
            }
        }
        (min, max)
    }

    /// Maximum of `|f''|`, which bounds `|f'(y) - f'(z)| / |y - z|`. The second
    /// derivative is affine on each segment, so endpoint values suffice.
    pub fn second_deriv_max(&self) -> f64 {
        (0..self.a.len())
            .map(|k| {
                let h = self.xs[k + 1] - self.xs[k];
                let at0 = (2.0 * self.a[k]).abs() / h;
                let at1 = (2.0 * self.a[k] + 6.0 * self.b[k]).abs() / h;
                at0.max(at1)
            })
            .fold(0.0, f64::max)
    }
}

fn non_monotone(segment: usize, what: &str) -> Error {
    Error::Construction(format!("{what} too steep for a monotone cubic on segment {segment}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp_f() -> Spline {
        Spline::new(&[(0.0, 0.0), (0.1, 0.251), (0.9, 0.349), (1.0, 1.0)], 1.0, 1.0).unwrap()
    }

    #[test]
    fn knots_are_exact() {
        let s = pp_f();
        for (x, y) in s.knots().collect::<Vec<_>>() {
            assert_eq!(s.eval(x).0, y);
            assert_eq!(s.inverse(y).unwrap(), x);
        }
        assert_eq!(s.eval(0.0).1, 1.0);
        assert_eq!(s.eval(1.0).1, 1.0);
    }

    #[test]
    fn slopes_respect_the_monotonicity_disc() {
        let s = pp_f();
        let xs: Vec<f64> = s.knots().map(|k| k.0).collect();
        let ys: Vec<f64> = s.knots().map(|k| k.1).collect();
        for k in 0..xs.len() - 1 {
            let d = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
            let (al, be) = (s.slopes()[k] / d, s.slopes()[k + 1] / d);
            assert!(al * al + be * be <= 9.0 + 1e-9);
        }
    }

    #[test]
    fn derivative_range_matches_scan() {
        let s = pp_f();
        let (lo, hi) = s.deriv_range(0.0, 1.0);
        let mut smin = f64::INFINITY;
        let mut smax = f64::NEG_INFINITY;
        for i in 0..=200_000 {
            let d = s.eval(i as f64 / 200_000.0).1;
            smin = smin.min(d);
            smax = smax.max(d);
        }
        assert!(lo <= smin && smin - lo < 1e-6);
        assert!(hi >= smax && hi - smax < 1e-6);
    }

    #[test]
    fn inverse_round_trip() {
        let s = pp_f();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let y = s.eval(x).0;
            assert!((s.inverse(y).unwrap() - x).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn rejects_non_monotone_pinned_slope() {
        // Secant 1 on a single segment, pinned slopes 4 and 1: alpha = 4 > 3.
        assert!(Spline::new(&[(0.0, 0.0), (1.0, 1.0)], 4.0, 1.0).is_err());
        assert!(Spline::new(&[(0.0, 0.0), (0.5, 0.5), (0.4, 0.7), (1.0, 1.0)], 1.0, 1.0).is_err());
    }
}
