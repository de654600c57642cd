//! Hypothesis checks: semigroup ping-pong certificates and endpoint slope
//! conditions.

use std::fmt;

use crate::diffeo::{GeneratorMap, GeneratorSet};
use crate::{Error, Result};

/// Containment slack absorbing evaluation rounding.
pub const PINGPONG_RHO: f64 = 1e-9;

/// Number of sample points used by [`check_endpoint_slopes`].
pub const SLOPE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Precondition(format!("[{lo}, {hi}] is not a nondegenerate subinterval of [0, 1]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// `[f(lo), f(hi)]` for an increasing `f`.
    pub fn image(&self, f: &GeneratorMap) -> Interval {
        Interval { lo: f.eval(self.lo).0, hi: f.eval(self.hi).0 }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Which containment failed and where.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub generator: String,
    pub endpoint: f64,
    pub image: f64,
}

/// `f(I ∪ J) ⊆ I` and `g(I ∪ J) ⊆ J`. Margins are, in order,
/// `f(lo) - I.lo`, `I.hi - f(hi)`, `g(lo) - J.lo`, `J.hi - g(hi)` where
/// `lo, hi` are the extreme endpoints of `I ∪ J`.
#[derive(Debug, Clone, PartialEq)]
pub struct PingPongCertificate {
    pub f: String,
    pub g: String,
    pub i: Interval,
    pub j: Interval,
    pub margins: [f64; 4],
    pub valid: bool,
    pub violation: Option<Violation>,
}

impl PingPongCertificate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks the ping-pong containments from the monotone endpoint images.
pub fn check_pingpong(f: &GeneratorMap, g: &GeneratorMap, i: Interval, j: Interval) -> Result<PingPongCertificate> {
    if !(i.lo > 0.0 && i.hi < 1.0 && j.lo > 0.0 && j.hi < 1.0) {
        return Err(Error::Precondition("ping-pong sets must lie inside (0, 1)".into()));
    }
    if i.overlaps(&j) {
        return Err(Error::Precondition(format!("ping-pong sets {i} and {j} overlap")));
    }
    let lo = i.lo.min(j.lo);
    let hi = i.hi.max(j.hi);
    let (flo, fhi) = (f.eval(lo).0, f.eval(hi).0);
    let (glo, ghi) = (g.eval(lo).0, g.eval(hi).0);
    let margins = [flo - i.lo, i.hi - fhi, glo - j.lo, j.hi - ghi];
    let checks = [(f, lo, flo), (f, hi, fhi), (g, lo, glo), (g, hi, ghi)];
    let violation = margins.iter().zip(checks).find(|(m, _)| **m < PINGPONG_RHO).map(|(_, (map, x, y))| Violation {
        generator: map.id().to_string(),
        endpoint: x,
        image: y,
    });
    Ok(PingPongCertificate {
        f: f.id().to_string(),
        g: g.id().to_string(),
        i,
        j,
        margins,
        valid: violation.is_none(),
        violation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Zero,
    One,
}

impl Side {
    pub fn from_index(side: u8) -> Result<Self> {
        match side {
            0 => Ok(Side::Zero),
            1 => Ok(Side::One),
            _ => Err(Error::Precondition(format!("side must be 0 or 1, got {side}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Side::Zero => 0,
            Side::One => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointSlopeCheck {
    pub side: Side,
    pub delta: f64,
    pub theta_bound: f64,
    /// Extreme sampled derivatives over all letters on their zones.
    pub sampled_min: f64,
    pub sampled_max: f64,
    /// The sampled extremes widened by `Lip(phi') * spacing / 2`.
    pub bound_min: f64,
    pub bound_max: f64,
    pub passed: bool,
}

/// Checks `1/theta < phi'(x) < theta` on the endpoint zone for every letter
/// `phi` of the symmetrized alphabet.
///
/// Since `(phi^-1)'(x) = 1 / phi'(phi^-1(x))` and the condition is symmetric
/// under reciprocals, an inverse letter is checked through the forward
/// derivative on the preimage of the zone, so each generator is checked on
/// the union of the zone and its preimage.
pub fn check_endpoint_slopes(set: &GeneratorSet, side: Side, delta: f64, theta: f64) -> Result<EndpointSlopeCheck> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Precondition(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    if !(theta > 1.0) {
        return Err(Error::Precondition(format!("theta must exceed 1, got {theta}")));
    }
    let mut check = EndpointSlopeCheck {
        side,
        delta,
        theta_bound: theta,
        sampled_min: f64::INFINITY,
        sampled_max: f64::NEG_INFINITY,
        bound_min: f64::INFINITY,
        bound_max: f64::NEG_INFINITY,
        passed: false,
    };
    for gen in set.generators() {
        let lip = gen.global_bounds().der_lip;
        if !lip.is_finite() {
            return Err(Error::Precondition(format!("generator `{}` has no derivative Lipschitz bound", gen.id())));
        }
        let (lo, hi) = match side {
            Side::One => ((1.0 - delta).min(gen.eval_inverse(1.0 - delta)?), 1.0),
            Side::Zero => (0.0, delta.max(gen.eval_inverse(delta)?)),
        };
        let h = (hi - lo) / (SLOPE_SAMPLES - 1) as f64;
        for k in 0..SLOPE_SAMPLES {
            let x = if k + 1 == SLOPE_SAMPLES { hi } else { lo + k as f64 * h };
            let d = gen.eval(x).1;
            check.sampled_min = check.sampled_min.min(d);
            check.sampled_max = check.sampled_max.max(d);
        }
        let slack = 0.5 * h * lip;
        check.bound_min = check.bound_min.min(check.sampled_min - slack);
        check.bound_max = check.bound_max.max(check.sampled_max + slack);
    }
    check.passed = check.sampled_min > 1.0 / theta
        && check.sampled_max < theta
        && check.bound_min > 1.0 / theta
        && check.bound_max < theta;
    Ok(check)
}

/// Halves `delta` from 0.25 until [`check_endpoint_slopes`] passes.
pub fn find_endpoint_zone(set: &GeneratorSet, side: Side, theta: f64) -> Result<EndpointSlopeCheck> {
    let mut delta = 0.25;
    let mut last = None;
    for _ in 0..48 {
        let check = check_endpoint_slopes(set, side, delta, theta)?;
        if check.passed {
            return Ok(check);
        }
        last = Some(check);
        delta *= 0.5;
    }
    let last = last.expect("at least one attempt");
    Err(Error::Precondition(format!(
        "no endpoint zone keeps derivatives within (1/{theta}, {theta}); at delta = {} they span [{}, {}]",
        last.delta, last.sampled_min, last.sampled_max
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::presets::{pp, pp_f, pp_g, PP_F_KNOTS, PP_I, PP_J};

    fn ij() -> (Interval, Interval) {
        (Interval::new(PP_I.0, PP_I.1).unwrap(), Interval::new(PP_J.0, PP_J.1).unwrap())
    }

    #[test]
    fn reference_pair_is_certified() {
        let (i, j) = ij();
        let c = check_pingpong(&pp_f(), &pp_g(), i, j).unwrap();
        assert!(c.valid);
        // f(0.25..0.75) lies in [0.251, 0.349], g in [0.651, 0.749].
        for m in c.margins {
            assert!((m - 0.001).abs() < 1e-12 || m > 0.001, "{m}");
        }
        assert!(c.min_margin() >= 0.001 - 1e-12);
    }

    #[test]
    fn containment_failure_reports_endpoint() {
        let (i, j) = ij();
        let m = GeneratorMap::mobius("m", 2.0).unwrap();
        let c = check_pingpong(&m, &pp_g(), i, j).unwrap();
        assert!(!c.valid);
        let v = c.violation.unwrap();
        assert_eq!(v.generator, "m");
        assert!(v.image > 0.35 || v.image < 0.25);
    }

    #[test]
    fn perturbed_upper_knot_stays_outside_window() {
        // The knot (0.9, 0.360) lies to the right of I ∪ J, whose largest
        // image is f(0.75).
        let mut knots = PP_F_KNOTS;
        knots[2] = (0.9, 0.360);
        let f = GeneratorMap::spline("f", &knots, 1.0, 1.0).unwrap();
        let (i, j) = ij();
        let c = check_pingpong(&f, &pp_g(), i, j).unwrap();
        eprintln!("f(0.75) = {}", f.eval(0.75).0);
        assert_eq!(c.valid, f.eval(0.75).0 <= 0.35 - PINGPONG_RHO);
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let i = Interval::new(0.2, 0.5).unwrap();
        let j = Interval::new(0.4, 0.7).unwrap();
        assert!(matches!(check_pingpong(&pp_f(), &pp_g(), i, j), Err(Error::Precondition(_))));
    }

    #[test]
    fn interval_images_are_monotone() {
        let f = pp_f();
        let i = Interval::new(0.3, 0.8).unwrap();
        let img = i.image(&f);
        for k in 1..100 {
            let y = f.eval(0.3 + 0.005 * k as f64).0;
            assert!(img.contains(y));
        }
    }

    #[test]
    fn endpoint_slope_examples() {
        let c = find_endpoint_zone(&pp(), Side::One, 1.05).unwrap();
        assert!(c.passed && c.delta > 0.0);
        let m = GeneratorSet::new(vec![GeneratorMap::mobius("m", 2.0).unwrap()]).unwrap();
        assert!(!check_endpoint_slopes(&m, Side::One, 0.01, 1.05).unwrap().passed);
        assert!(find_endpoint_zone(&m, Side::One, 1.05).is_err());
        let id = GeneratorSet::new(vec![GeneratorMap::identity("e").unwrap()]).unwrap();
        assert!(check_endpoint_slopes(&id, Side::One, 0.49, 1.0001).unwrap().passed);
        assert!(check_endpoint_slopes(&id, Side::One, 0.5, 1.1).is_err());
        assert!(check_endpoint_slopes(&id, Side::One, 0.1, 1.0).is_err());
    }
}
