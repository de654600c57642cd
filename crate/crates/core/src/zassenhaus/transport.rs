//! Interval transport: the images `Delta_g = g(Delta)` of a small interval
//! whose left end is the base point, their length sums over spheres, and an
//! overlap `g2(x0) in Delta_{g1}` pulled back into `Delta`.

use crate::action::{c1_dist_to_id, eval_point, GridSpec, SupEstimate};
use crate::certify::Interval;
use crate::diffeo::GeneratorSet;
use crate::par;
use crate::words::{Word, WordTree};
use crate::zassenhaus::{distinctness, Caps, Distinctness, SearchStatus};
use crate::{Error, Result};

/// Relative slack in the length audits.
const AUDIT_REL: f64 = 1e-12;
/// Grid used to certify that the generators lie in the `epsilon` ball.
pub const BALL_GRID: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportParams {
    /// `Delta = [x0, x0 + delta_len]`.
    pub x0: f64,
    pub delta_len: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

impl TransportParams {
    pub fn delta(&self) -> Result<Interval> {
        let d = Interval::new(self.x0, self.x0 + self.delta_len)?;
        if !(d.lo > 0.0 && d.hi < 1.0) {
            return Err(Error::Precondition(format!("Delta = {d} must lie inside (0, 1)")));
        }
        Ok(d)
    }

    /// `(1 - 10 epsilon) lambda > 1`, which makes the sphere sums diverge.
    pub fn sums_diverge(&self) -> bool {
        (1.0 - 10.0 * self.epsilon) * self.lambda > 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportLevel {
    pub n: usize,
    pub sphere_size: u64,
    /// `sum_{|g| = n} |Delta_g|` over reduced words.
    pub sum: f64,
    /// `(1 - 10 epsilon)^n lambda^n |Delta|`.
    pub lower_bound: f64,
    /// The sphere has more than `lambda^n` words, so the bound is claimed.
    pub bound_applies: bool,
    pub bound_holds: bool,
    /// Transitions `w -> s w` audited at this level.
    pub transitions: u64,
    /// `|Delta_sw| < (1 - 10 epsilon) |Delta_w|`.
    pub violations: u64,
    /// `|Delta_sw| < (inf s') |Delta_w|` with the generator's own bound.
    pub sharp_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlap {
    pub n: usize,
    pub g1: Word,
    pub g2: Word,
    pub g2_x0: f64,
    pub delta_g1: Interval,
    /// `g1^-1 g2 (x0)`, evaluated from the reduced word.
    pub pullback: f64,
    pub in_delta: bool,
    pub distinct: Distinctness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportReport {
    pub params: TransportParams,
    pub d1: Vec<SupEstimate>,
    pub levels: Vec<TransportLevel>,
    pub overlap: Option<Overlap>,
    pub status: SearchStatus,
}

struct Entry {
    lo: f64,
    hi: f64,
    level: usize,
    index: usize,
}

/// Computes the sphere sums for `n = 1..=n_max` and searches the growing
/// ball for an overlap.
pub fn interval_transport_search(set: &GeneratorSet, params: &TransportParams, caps: &Caps) -> Result<TransportReport> {
    let delta = params.delta()?;
    if !(params.epsilon > 0.0 && params.lambda > 1.0) {
        return Err(Error::Precondition("transport needs epsilon > 0 and lambda > 1".into()));
    }
    let grid = GridSpec::new(BALL_GRID)?;
    let mut d1 = Vec::with_capacity(set.len());
    for (i, g) in set.generators().iter().enumerate() {
        let est = c1_dist_to_id(&Word::letter(crate::words::Letter::new(i as u16, false)), grid, set)?;
        if est.certified_bound >= params.epsilon {
            return Err(Error::Precondition(format!(
                "generator `{}` has certified d1 distance {} >= epsilon = {}",
                g.id(),
                est.certified_bound,
                params.epsilon
            )));
        }
        d1.push(est);
    }

    let contraction = 1.0 - 10.0 * params.epsilon;
    let mut tree = WordTree::new(set.alphabet());
    let mut ball: Vec<Entry> = vec![Entry { lo: delta.lo, hi: delta.hi, level: 0, index: 0 }];
    let mut prev: Vec<(f64, f64)> = vec![(delta.lo, delta.hi)];
    let mut levels = Vec::new();
    let mut overlap = None;
    let mut status = SearchStatus::NotFound;
    for n in 1..=caps.n_max {
        if caps.expired() {
            status = SearchStatus::TimeBudget;
            break;
        }
        if ball.len() + prev.len() * 2 * set.len() > caps.node_cap {
            status = SearchStatus::CapExhausted;
            break;
        }
        let nodes = tree.grow()?.to_vec();
        let rows = par::try_map_range(nodes.len(), |i| -> Result<(f64, f64, bool, bool)> {
            let node = nodes[i];
            let (plo, phi) = prev[node.parent as usize];
            let lo = set.apply(node.letter, plo)?.0;
            let hi = set.apply(node.letter, phi)?.0;
            let (len, parent_len) = (hi - lo, phi - plo);
            let slack = AUDIT_REL * parent_len;
            let inf = set.letter_bounds(node.letter).der_inf;
            Ok((lo, hi, len < contraction * parent_len - slack, len < inf * parent_len - slack))
        })?;
        let sum: f64 = rows.iter().map(|r| r.1 - r.0).sum();
        let sphere_size = rows.len() as u64;
        let lower_bound = (contraction * params.lambda).powi(n as i32) * delta.len();
        let bound_applies = sphere_size as f64 > params.lambda.powi(n as i32);
        levels.push(TransportLevel {
            n,
            sphere_size,
            sum,
            lower_bound,
            bound_applies,
            bound_holds: !bound_applies || sum > lower_bound,
            transitions: sphere_size,
            violations: rows.iter().filter(|r| r.2).count() as u64,
            sharp_violations: rows.iter().filter(|r| r.3).count() as u64,
        });
        prev = rows.iter().map(|r| (r.0, r.1)).collect();
        ball.extend(prev.iter().enumerate().map(|(index, &(lo, hi))| Entry { lo, hi, level: n, index }));
        if overlap.is_none() {
            overlap = find_overlap(set, &tree, &ball, delta, n)?;
        }
    }
    if overlap.is_some() && status == SearchStatus::NotFound {
        status = SearchStatus::Success;
    }
    Ok(TransportReport { params: *params, d1, levels, overlap, status })
}

/// The shortlex-least `g1` admitting some `g2 != g1` (as elements, when
/// decidable) with `g2(x0)` in `Delta_{g1}`; for that `g1` the shortlex-least
/// such `g2`.
fn find_overlap(
    set: &GeneratorSet,
    tree: &WordTree,
    ball: &[Entry],
    delta: Interval,
    n: usize,
) -> Result<Option<Overlap>> {
    let mut by_value: Vec<usize> = (0..ball.len()).collect();
    par::sort_by(&mut by_value, |&a, &b| ball[a].lo.total_cmp(&ball[b].lo).then(a.cmp(&b)));
    let starts: Vec<f64> = by_value.iter().map(|&i| ball[i].lo).collect();
    // `ball` is already in shortlex order: by level, then lexicographic.
    for (i1, e1) in ball.iter().enumerate() {
        let from = starts.partition_point(|&v| v < e1.lo);
        let to = starts.partition_point(|&v| v <= e1.hi);
        let mut hits: Vec<usize> = by_value[from..to].iter().copied().filter(|&i| i != i1).collect();
        hits.sort_unstable();
        let g1 = tree.word(e1.level, e1.index);
        for i2 in hits {
            let e2 = &ball[i2];
            let g2 = tree.word(e2.level, e2.index);
            let distinct = distinctness(set, &g1, &g2)?;
            if distinct == Distinctness::Equal {
                continue;
            }
            let v = g1.invert().concat_reduce(&g2);
            let pullback = eval_point(&v, delta.lo, set)?;
            return Ok(Some(Overlap {
                n,
                g1,
                g2,
                g2_x0: e2.lo,
                delta_g1: Interval { lo: e1.lo, hi: e1.hi },
                pullback,
                in_delta: delta.contains(pullback),
                distinct,
            }));
        }
    }
    Ok(None)
}
