//! Words acting on points: orbit traces with chain-rule products, grid and
//! certified distances to the identity, and ball probes of discreteness.

use crate::diffeo::{check_domain, Bounds, GeneratorSet};
use crate::numeric::CompensatedProduct;
use crate::par;
use crate::words::{Word, WordTree};
use crate::{Error, Result};

/// Intermediate points may overshoot `[0, 1]` by this much before they are
/// treated as a numeric failure.
pub const CLAMP_TOL: f64 = 1e-12;

/// The orbit `y_k = W_k(x0)` of a point under the suffixes of a word, with
/// the letter derivatives `h_{k+1}'(y_k)` and their product `W'(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    pub x0: f64,
    pub points: Vec<f64>,
    pub letter_derivs: Vec<f64>,
    pub chain_product: f64,
    /// Set when some intermediate point was pulled back into `[0, 1]`.
    pub clamped: bool,
}

impl OrbitTrace {
    pub fn value(&self) -> f64 {
        *self.points.last().expect("trace holds x0")
    }
}

#[inline]
fn settle(y: f64) -> Result<(f64, bool)> {
    if (0.0..=1.0).contains(&y) {
        Ok((y, false))
    } else if y > -CLAMP_TOL && y < 1.0 + CLAMP_TOL {
        Ok((y.clamp(0.0, 1.0), true))
    } else {
        Err(Error::Numeric(format!("orbit left [0, 1]: {y}")))
    }
}

/// Applies `w` to `x` right to left (suffix first), recording every step.
pub fn apply_word(w: &Word, x: f64, set: &GeneratorSet) -> Result<OrbitTrace> {
    check_domain(x)?;
    let n = w.len();
    let mut points = Vec::with_capacity(n + 1);
    let mut letter_derivs = Vec::with_capacity(n);
    let mut product = CompensatedProduct::new();
    let mut clamped = false;
    let mut y = x;
    points.push(y);
    for &l in w.letters().iter().rev() {
        let (next, d) = set.apply(l, y)?;
        let (next, c) = settle(next)?;
        clamped |= c;
        letter_derivs.push(d);
        product.mul(d);
        y = next;
        points.push(y);
    }
    Ok(OrbitTrace { x0: x, points, letter_derivs, chain_product: product.value(), clamped })
}

/// `(w(x), w'(x))` without keeping the trace.
#[inline]
pub fn eval_word(w: &Word, x: f64, set: &GeneratorSet) -> Result<(f64, f64)> {
    let mut y = x;
    let mut product = CompensatedProduct::new();
    for &l in w.letters().iter().rev() {
        let (next, d) = set.apply(l, y)?;
        y = settle(next)?.0;
        product.mul(d);
    }
    Ok((y, product.value()))
}

/// Value only.
#[inline]
pub fn eval_point(w: &Word, x: f64, set: &GeneratorSet) -> Result<f64> {
    let mut y = x;
    for &l in w.letters().iter().rev() {
        y = settle(set.apply(l, y)?.0)?.0;
    }
    Ok(y)
}

/// Bounds on `w'` and on its Lipschitz constant, composed letter by letter
/// with `Lip((g o f)') <= Lip(g') sup(f')^2 + sup(g') Lip(f')`.
pub fn word_bounds(w: &Word, set: &GeneratorSet) -> Result<Bounds> {
    let mut acc = Bounds { der_inf: 1.0, der_sup: 1.0, der_lip: 0.0 };
    for &l in w.letters().iter().rev() {
        let b = set.letter_bounds(l);
        if !(b.der_lip.is_finite() && b.der_sup.is_finite()) {
            return Err(Error::Precondition(format!(
                "generator `{}` has no finite derivative Lipschitz bound",
                set.generator(l.gen()).id()
            )));
        }
        acc = Bounds {
            der_inf: acc.der_inf * b.der_inf,
            der_sup: acc.der_sup * b.der_sup,
            der_lip: b.der_lip * acc.der_sup * acc.der_sup + b.der_sup * acc.der_lip,
        };
    }
    Ok(acc)
}

/// Uniform grid `x_i = i / N`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("grid needs N >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i == self.n {
            1.0
        } else {
            i as f64 / self.n as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.point(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimate {
    pub grid_max: f64,
    pub certified_bound: f64,
    pub grid: GridSpec,
    /// Grid point where the maximum is attained (first one on ties).
    pub argmax: f64,
}

fn first_max(values: &[f64]) -> (usize, f64) {
    values.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
}

/// `max_i |w(x_i) - x_i|` and the monotone bound `grid_max + 1/N`: for an
/// increasing `w` and `x` in `[x_i, x_{i+1}]`,
/// `w(x_i) - x_i - tau <= w(x) - x <= w(x_{i+1}) - x_{i+1} + tau`.
pub fn c0_dist_to_id(w: &Word, grid: GridSpec, set: &GeneratorSet) -> Result<SupEstimate> {
    let disp = par::try_map_range(grid.n() + 1, |i| {
        let x = grid.point(i);
        eval_point(w, x, set).map(|y| (y - x).abs())
    })?;
    let (i, grid_max) = first_max(&disp);
    Ok(SupEstimate { grid_max, certified_bound: grid_max + grid.step(), grid, argmax: grid.point(i) })
}

/// `C1` displacement `sup |w - id| + sup |w' - 1|` on the grid, with a
/// certified upper bound from the composed derivative bounds. Each `x` is
/// within `tau/2` of a grid point, so
/// `sup |w' - 1| <= max_i |w'(x_i) - 1| + tau/2 Lip(w')` and
/// `sup |w - id| <= max_i |w(x_i) - x_i| + tau/2 sup |w' - 1|`.
pub fn c1_dist_to_id(w: &Word, grid: GridSpec, set: &GeneratorSet) -> Result<SupEstimate> {
    let bounds = word_bounds(w, set)?;
    let vals = par::try_map_range(grid.n() + 1, |i| {
        let x = grid.point(i);
        eval_word(w, x, set).map(|(y, d)| ((y - x).abs(), (d - 1.0).abs()))
    })?;
    let disp: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let slope: Vec<f64> = vals.iter().map(|v| v.1).collect();
    let (i, dmax) = first_max(&disp);
    let (_, pmax) = first_max(&slope);
    let half = 0.5 * grid.step();
    let slope_sup = pmax + half * bounds.der_lip;
    let slope_global = (bounds.der_sup - 1.0).max(1.0 - bounds.der_inf);
    let disp_sup = dmax + half * slope_sup.min(slope_global);
    Ok(SupEstimate { grid_max: dmax + pmax, certified_bound: disp_sup + slope_sup, grid, argmax: grid.point(i) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// `|g(x) - x|`
    Displacement,
    /// `|g'(x) - 1|`
    DerivGap,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Displacement => "displacement",
            ProbeKind::DerivGap => "deriv_gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeStatus {
    Complete,
    CapExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeLevel {
    pub n: usize,
    /// Minimum over all nontrivial words of length `<= n`.
    pub minimum: f64,
    pub argmin: Word,
}

/// Minimum of a displacement functional over a Cayley ball. With several
/// probe points the functional of a word is its maximum over the points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub points: Vec<f64>,
    pub radius: usize,
    pub levels: Vec<ProbeLevel>,
    pub status: ProbeStatus,
    /// The minimum is (numerically) zero.
    pub degenerate: bool,
}

impl ProbeReport {
    pub fn x0(&self) -> f64 {
        self.points[0]
    }

    pub fn minimum(&self) -> f64 {
        self.levels.last().map_or(f64::INFINITY, |l| l.minimum)
    }

    pub fn argmin(&self) -> Option<&Word> {
        self.levels.last().map(|l| &l.argmin)
    }
}

pub const DEFAULT_BALL_CAP: usize = 50_000_000;
const DEGENERATE_TOL: f64 = 1e-13;

/// `min |g(x0) - x0|` over nontrivial reduced words of length `<= n`.
pub fn min_displacement_ball(set: &GeneratorSet, n: usize, x0: f64) -> Result<ProbeReport> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::Precondition(format!("probe point {x0} must lie in (0, 1)")));
    }
    probe_ball(set, n, &[x0], ProbeKind::Displacement, DEFAULT_BALL_CAP)
}

/// `min |g'(x0) - 1|` over nontrivial reduced words of length `<= n`.
pub fn min_deriv_gap_ball(set: &GeneratorSet, n: usize, x0: f64) -> Result<ProbeReport> {
    check_domain(x0)?;
    probe_ball(set, n, &[x0], ProbeKind::DerivGap, DEFAULT_BALL_CAP)
}

/// General ball probe. The ball is grown level by level; each word's values
/// at the probe points are computed from its parent's by one letter.
pub fn probe_ball(set: &GeneratorSet, n: usize, points: &[f64], kind: ProbeKind, cap: usize) -> Result<ProbeReport> {
    if n == 0 {
        return Err(Error::Precondition("probe radius must be >= 1 (the empty ball has no nontrivial element)".into()));
    }
    if points.is_empty() {
        return Err(Error::Precondition("probe needs at least one point".into()));
    }
    for &x in points {
        check_domain(x)?;
    }
    let p = points.len();
    let mut tree = WordTree::new(set.alphabet());
    // Row-major per word: values then derivatives at each probe point.
    let mut vals: Vec<f64> = points.to_vec();
    let mut ders: Vec<f64> = vec![1.0; p];
    let mut levels: Vec<ProbeLevel> = Vec::new();
    let mut best: Option<(f64, Word)> = None;
    let mut status = ProbeStatus::Complete;
    let mut total = 1usize;
    for level in 1..=n {
        let size = tree.level(level - 1).len() * 2 * set.len();
        if total + size > cap {
            status = ProbeStatus::CapExceeded;
            break;
        }
        let nodes = tree.grow()?.to_vec();
        total += nodes.len();
        let rows = par::try_map_range(nodes.len(), |i| -> Result<(Vec<f64>, Vec<f64>, f64)> {
            let node = nodes[i];
            let base = node.parent as usize * p;
            let mut v = Vec::with_capacity(p);
            let mut d = Vec::with_capacity(p);
            let mut score = f64::NEG_INFINITY;
            for k in 0..p {
                let (y, dy) = set.apply(node.letter, vals[base + k])?;
                let y = settle(y)?.0;
                let dd = dy * ders[base + k];
                let s = match kind {
                    ProbeKind::Displacement => (y - points[k]).abs(),
                    ProbeKind::DerivGap => (dd - 1.0).abs(),
                };
                score = score.max(s);
                v.push(y);
                d.push(dd);
            }
            Ok((v, d, score))
        })?;
        let mut level_best: Option<(f64, usize)> = None;
        for (i, r) in rows.iter().enumerate() {
            if level_best.is_none_or(|(b, _)| r.2 < b) {
                level_best = Some((r.2, i));
            }
        }
        if let Some((value, i)) = level_best {
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, tree.word(level, i)));
            }
        }
        let (minimum, argmin) = best.clone().expect("level is nonempty");
        levels.push(ProbeLevel { n: level, minimum, argmin });
        vals = rows.iter().flat_map(|r| r.0.iter().copied()).collect();
        ders = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
    }
    let degenerate = levels.last().is_some_and(|l| l.minimum <= DEGENERATE_TOL);
    Ok(ProbeReport { kind, points: points.to_vec(), radius: n, levels, status, degenerate })
}
