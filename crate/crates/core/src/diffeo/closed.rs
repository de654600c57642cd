//! Closed-form generator families.

use super::solve::solve_increasing;
use crate::{Error, Result};

/// `x -> lambda x / (1 + (lambda - 1) x)`, a projective map fixing 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub lambda: f64,
}

impl Mobius {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Construction(format!("mobius needs lambda > 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let l = self.lambda;
        let den = 1.0 + (l - 1.0) * x;
        let value = if x == 0.0 {
            0.0
        } else if x == 1.0 {
            1.0
        } else {
            l * x / den
        };
        (value, l / (den * den))
    }

    /// The inverse is `mobius(1 / lambda)`, written without forming `1 / lambda`.
    #[inline]
    pub fn inverse(&self, y: f64) -> f64 {
        if y == 0.0 || y == 1.0 {
            return y;
        }
        y / (self.lambda + (1.0 - self.lambda) * y)
    }

    /// The derivative is monotone on `[0, 1]`.
    pub fn deriv_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let a = self.eval(lo).1;
        let b = self.eval(hi).1;
        (a.min(b), a.max(b))
    }

    pub fn second_deriv_max(&self) -> f64 {
        let l = self.lambda;
        let num = 2.0 * l * (l - 1.0).abs();
        // |f''| = num / (1 + (l-1)x)^3 is monotone, so the max is at an endpoint.
        num.max(num / (l * l * l))
    }
}

/// `x -> x + c w phi((x - lo) / w)` on `[lo, hi]` with `phi(t) = t^2 (1-t)^2`,
/// `w = hi - lo`, and the identity outside. With `lo = 0, hi = 1` this is the
/// endpoint-flat bump `x + c x^2 (1-x)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyBump {
    pub c: f64,
    pub lo: f64,
    pub hi: f64,
}

/// `max |phi'|` on `[0, 1]`, attained at `t = (3 -+ sqrt 3) / 6`.
pub const PHI_PRIME_MAX: f64 = 0.19245008972987526;
/// `max phi` on `[0, 1]`, attained at `t = 1/2`.
pub const PHI_MAX: f64 = 0.0625;

#[inline]
fn phi(t: f64) -> f64 {
    let s = t * (1.0 - t);
    s * s
}

#[inline]
fn phi_prime(t: f64) -> f64 {
    2.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
}

impl PolyBump {
    pub fn new(c: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(c.abs() < 5.0) {
            return Err(Error::Construction(format!("polybump needs |c| < 5, got {c}")));
        }
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Construction(format!("polybump support [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1")));
        }
        Ok(Self { c, lo, hi })
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x <= self.lo || x >= self.hi {
            return (x, 1.0);
        }
        let w = self.width();
        let t = (x - self.lo) / w;
        (x + self.c * w * phi(t), 1.0 + self.c * phi_prime(t))
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y <= self.lo || y >= self.hi {
            return Ok(y);
        }
        let (x, residual) = solve_increasing(|x| self.eval(x), y, self.lo, self.hi)?;
        if residual > 1e-14 {
            return Err(Error::Numeric(format!("polybump inverse at {y} left residual {residual}")));
        }
        Ok(x)
    }

    pub fn deriv_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let w = self.width();
        let t0 = ((lo - self.lo) / w).clamp(0.0, 1.0);
        let t1 = ((hi - self.lo) / w).clamp(0.0, 1.0);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let s3 = 3.0f64.sqrt();
        for t in [t0, t1, (3.0 - s3) / 6.0, (3.0 + s3) / 6.0] {
            if t >= t0 && t <= t1 {
                let d = 1.0 + self.c * phi_prime(t);
                min = min.min(d);
                max = max.max(d);
            }
        }
        // Outside the support the derivative is exactly 1.
        if lo < self.lo || hi > self.hi {
            min = min.min(1.0);
            max = max.max(1.0);
        }
        (min, max)
    }

    /// `|phi''| <= 2` on `[0, 1]`.
    pub fn second_deriv_max(&self) -> f64 {
        2.0 * self.c.abs() / self.width()
    }

    /// `sup |f - id| + sup |f' - 1|`, exact.
    pub fn c1_displacement(&self) -> f64 {
        self.c.abs() * (self.width() * PHI_MAX + PHI_PRIME_MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_prime_max_constant() {
        let s3 = 3.0f64.sqrt();
        assert!((phi_prime((3.0 - s3) / 6.0) - PHI_PRIME_MAX).abs() < 1e-16);
        assert!((1.0 / (3.0 * s3) - PHI_PRIME_MAX).abs() < 1e-16);
    }

    #[test]
    fn mobius_endpoints_exact_for_awkward_lambda() {
        let m = Mobius::new(0.1).unwrap();
        assert_eq!(m.eval(1.0).0, 1.0);
        assert_eq!(m.inverse(1.0), 1.0);
        assert!((m.inverse(m.eval(0.3).0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn localized_bump_is_identity_off_support() {
        let b = PolyBump::new(0.5, 0.4, 0.41).unwrap();
        assert_eq!(b.eval(0.3), (0.3, 1.0));
        assert_eq!(b.inverse(0.7).unwrap(), 0.7);
        let y = b.eval(0.405).0;
        assert!((b.inverse(y).unwrap() - 0.405).abs() < 1e-15);
    }
}
