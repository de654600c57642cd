//! Flattening: pulling back two positive words whose images collide near
//! the endpoint 1 yields an element `C0`-close to the identity.
//!
//! Candidates are `h = U beta alpha W0` for nonempty positive words `U` in
//! `alpha`, `beta`, where `(alpha, beta, z0)` satisfies
//! `z0 <= alpha(z0) <= beta alpha(z0)` and `W0(x_1) = z0` lies in the
//! endpoint zone. For two candidates `h1`, `h2` the element `h1^-1 h2` is
//! certified on a fine grid.

use crate::action::{c0_dist_to_id, eval_point, eval_word, GridSpec, SupEstimate};
use crate::certify::{find_endpoint_zone, EndpointSlopeCheck, Interval, PingPongCertificate, Side};
use crate::diffeo::GeneratorSet;
use crate::par;
use crate::words::{positive_word, Letter, Word};
use crate::zassenhaus::escape::{choose_case, find_escape_word, CaseChoice};
use crate::zassenhaus::{pigeonhole_bound, Caps, SearchStatus};
use crate::{Error, Result};

/// Slack in the base-point and pull-back audits.
pub const AUDIT_TOL: f64 = 1e-12;
/// Grid for the dense confirmation of an accepted element.
pub const ORACLE_GRID: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlattenParams {
    pub epsilon: f64,
    /// Grid size `N`; `x_i = i / N`.
    pub n_grid: usize,
    /// Endpoint slope bound `theta_N`.
    pub theta: f64,
    /// Bucket width is `bucket_base^-n`.
    pub bucket_base: f64,
    /// Grid used to certify each examined pair.
    pub cert_grid: usize,
    /// Each candidate is paired with this many bucket neighbours.
    pub pair_window: usize,
    /// Pairs certified exactly per level.
    pub exact_pairs: usize,
    /// Length cap for the escape word `W`.
    pub escape_len: usize,
}

impl FlattenParams {
    /// `N = ceil(1/epsilon) + 1`, `theta_N = (1 + 2^(1/2N)) / 2`,
    /// bucket base `2^(1/2N)`.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
        }
        let n_grid = (1.0 / epsilon).ceil() as usize + 1;
        let base = 2f64.powf(0.5 / n_grid as f64);
        let p = Self {
            epsilon,
            n_grid,
            theta: 0.5 * (1.0 + base),
            bucket_base: base,
            cert_grid: 1000,
            pair_window: 8,
            exact_pairs: 4,
            escape_len: 4096,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 3 {
            return Err(Error::Precondition(format!("N must be >= 3, got {}", self.n_grid)));
        }
        if !(1.0 / (self.n_grid as f64) < self.epsilon) {
            return Err(Error::Precondition(format!("1/N = {} is not below epsilon", 1.0 / self.n_grid as f64)));
        }
        let limit = 2f64.powf(0.5 / self.n_grid as f64);
        if !(self.theta > 1.0 && self.theta < limit) {
            return Err(Error::Precondition(format!("theta_N = {} must lie in (1, {limit})", self.theta)));
        }
        if !(self.bucket_base > 1.0) || self.cert_grid < 2 || self.pair_window == 0 || self.exact_pairs == 0 {
            return Err(Error::Precondition("invalid flatten search parameters".into()));
        }
        Ok(())
    }
}

/// One row of the run table.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenLevel {
    pub n: usize,
    /// Candidates with `|U| <= n`: `2^(n+1) - 2`.
    pub candidates: u64,
    /// Occupied buckets among the words with `|U| = n`.
    pub buckets: usize,
    pub colliding_buckets: usize,
    pub pairs_certified: usize,
    /// Smallest certified bound so far (running minimum).
    pub best_cert: f64,
    pub status: SearchStatus,
}

/// A certified pair of candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenPair {
    pub n: usize,
    /// `U1`, `U2` as positive words in `alpha = a`, `beta = b`.
    pub u1: Word,
    pub u2: Word,
    pub h1: Word,
    pub h2: Word,
    /// `reduce(h1^-1 h2)`.
    pub v: Word,
    pub c0: SupEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlattenAudit {
    /// Candidates with `U beta alpha (z0) >= z0 - tol` checked / violated.
    pub basepoint_checked: u64,
    pub basepoint_violations: u64,
    /// Candidates all of whose suffixes `s` satisfy `s(y_1) >= y_1 - tol`.
    pub suffix_checked: u64,
    pub suffix_violations: u64,
    /// Pull-back trace points `u^-1(z_i)` checked against `y_1`.
    pub pullback_points: u64,
    pub pullback_below_y1: u64,
    /// Letter derivatives at trace points inside the endpoint zone, and how
    /// many left `(1/theta, theta)`.
    pub zone_letters: u64,
    pub zone_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlattenReport {
    pub params: FlattenParams,
    pub slope_check: EndpointSlopeCheck,
    /// `(f, g)` were replaced by `(f^-1, g^-1)`.
    pub swapped: bool,
    pub escape_word: Word,
    /// `W0 = W` in cases 1 and 2, `reduce(g f W)` in case 3.
    pub base_word: Word,
    pub z: f64,
    pub case: CaseChoice,
    /// `y_i = W0(x_i)`, `i = 1..N-1`.
    pub y: Vec<f64>,
    pub levels: Vec<FlattenLevel>,
    pub status: SearchStatus,
    pub accepted: Option<FlattenPair>,
    /// Smallest certified pair seen (the accepted one on success).
    pub best: Option<FlattenPair>,
    /// Dense-grid `sup |V - id|` of the accepted element.
    pub oracle_max: Option<f64>,
    /// A grid point where the accepted `V` visibly moves, if any.
    pub witness: Option<f64>,
    pub audit: FlattenAudit,
    /// `M = 2 sup(|f'| + |g'|)` and `m = |W0|`.
    pub m_const: f64,
    pub m_len: usize,
    pub theoretical_n: Option<usize>,
    pub empirical_n: Option<usize>,
}

/// Level data: values and derivatives of every candidate at `x_1..x_{N-1}`
/// (row-major) and an inherited suffix-violation flag.
struct Level {
    vals: Vec<f64>,
    ders: Vec<f64>,
    bad_suffix: Vec<bool>,
}

/// Runs the flattening search on a two-generator set with a valid ping-pong
/// certificate for generators 0 and 1.
pub fn flatten(
    set: &GeneratorSet,
    cert: &PingPongCertificate,
    params: &FlattenParams,
    caps: &Caps,
) -> Result<FlattenReport> {
    params.validate()?;
    if set.len() != 2 {
        return Err(Error::Precondition("flattening needs exactly two generators".into()));
    }
    if !cert.valid || cert.f != set.generator(0).id() || cert.g != set.generator(1).id() {
        return Err(Error::Precondition(format!(
            "no valid free-subsemigroup certificate for ({}, {})",
            set.generator(0).id(),
            set.generator(1).id()
        )));
    }
    let slope_check = find_endpoint_zone(set, Side::One, params.theta)?;
    let delta = slope_check.delta;
    let zone = Interval { lo: 1.0 - delta, hi: 1.0 };
    let n = params.n_grid;
    let x1 = 1.0 / n as f64;

    let (escape_word, z, swapped, f, g, case) = find_base(set, x1, zone, params.escape_len)?;
    let base_word = if case.case == 3 {
        Word::reduce([g, f].into_iter().chain(escape_word.letters().iter().copied()))
    } else {
        escape_word.clone()
    };
    let grid = GridSpec::new(n)?;
    let y = (1..n).map(|i| eval_point(&base_word, grid.point(i), set)).collect::<Result<Vec<_>>>()?;
    let y1 = y[0];

    let alpha = case.alpha.clone();
    let beta = case.beta.clone();
    let images = [alpha.clone(), beta.clone()];
    let tail = beta.concat_reduce(&alpha).concat_reduce(&base_word);
    let p = n - 1;

    let mut audit = FlattenAudit::default();
    // alpha(y_1) and beta alpha(y_1) are the shortest suffixes.
    let a1 = eval_point(&alpha, y1, set)?;
    let ba1 = eval_point(&beta, a1, set)?;
    let root_bad = a1 < y1 - AUDIT_TOL || ba1 < y1 - AUDIT_TOL;

    let mut level = Level { vals: Vec::with_capacity(p), ders: Vec::with_capacity(p), bad_suffix: vec![root_bad] };
    for i in 1..n {
        let (v, d) = eval_word(&tail, grid.point(i), set)?;
        level.vals.push(v);
        level.ders.push(d);
    }

    let m_const = set.m_double();
    let m_len = base_word.len();
    let theoretical_n = pigeonhole_bound(m_const, m_len, params.theta, n, params.epsilon).ok();

    let mut levels = Vec::new();
    let mut best: Option<FlattenPair> = None;
    let mut accepted = None;
    let mut status = SearchStatus::CapExhausted;
    let mut candidates = 0u64;
    for k in 1..=caps.n_max {
        if caps.expired() {
            status = SearchStatus::TimeBudget;
            break;
        }
        let size = 1usize << k;
        if k >= 63 || size > caps.node_cap {
            break;
        }
        level = grow_level(&level, &alpha, &beta, p, set)?;
        candidates += size as u64;

        for (idx, &bad) in level.bad_suffix.iter().enumerate() {
            audit.basepoint_checked += 1;
            if level.vals[idx * p] < y1 - AUDIT_TOL {
                audit.basepoint_violations += 1;
            }
            audit.suffix_checked += 1;
            if bad {
                audit.suffix_violations += 1;
            }
        }

        let scale = params.bucket_base.powi(k as i32);
        let (order, buckets, colliding) = bucket_order(&level, p, scale);
        let pairs = rank_pairs(&level, &order, p, params.pair_window, params.exact_pairs);
        let mut certified = 0;
        for (i1, i2) in pairs {
            let u1 = positive_word(k, i1 as u64);
            let u2 = positive_word(k, i2 as u64);
            let h1 = u1.substitute(&images).concat_reduce(&tail);
            let h2 = u2.substitute(&images).concat_reduce(&tail);
            let v = h1.invert().concat_reduce(&h2);
            if v.is_empty() {
                continue;
            }
            let c0 = c0_dist_to_id(&v, GridSpec::new(params.cert_grid)?, set)?;
            certified += 1;
            let pair = FlattenPair { n: k, u1, u2, h1, h2, v, c0 };
            let ok = c0.certified_bound < 2.0 * params.epsilon;
            if best.as_ref().is_none_or(|b| c0.certified_bound < b.c0.certified_bound) {
                best = Some(pair.clone());
            }
            if ok {
                accepted = Some(pair);
                break;
            }
        }
        let row_status = if accepted.is_some() { SearchStatus::Success } else { SearchStatus::NotFound };
        levels.push(FlattenLevel {
            n: k,
            candidates,
            buckets,
            colliding_buckets: colliding,
            pairs_certified: certified,
            best_cert: best.as_ref().map_or(f64::INFINITY, |b| b.c0.certified_bound),
            status: row_status,
        });
        if accepted.is_some() {
            status = SearchStatus::Success;
            break;
        }
    }

    let mut oracle_max = None;
    let mut witness = None;
    if let Some(pair) = &accepted {
        pullback_audit(set, pair, &alpha, &beta, &y, zone, params.theta, &mut audit)?;
        let oracle = c0_dist_to_id(&pair.v, GridSpec::new(ORACLE_GRID)?, set)?;
        oracle_max = Some(oracle.grid_max);
        if oracle.grid_max > 0.0 {
            witness = Some(oracle.argmax);
        }
    }
    let empirical_n = accepted.as_ref().map(|a| a.n);
    Ok(FlattenReport {
        params: *params,
        slope_check,
        swapped,
        escape_word,
        base_word,
        z,
        case,
        y,
        levels,
        status,
        accepted,
        best,
        oracle_max,
        witness,
        audit,
        m_const,
        m_len,
        theoretical_n,
        empirical_n,
    })
}

type Base = (Word, f64, bool, Letter, Letter, CaseChoice);

/// Finds `W` with `f^i W(x_1)`, `g^i W(x_1)` (`|i| <= 2`) and the case point
/// `z0` inside the zone, shrinking the target until they are.
fn find_base(set: &GeneratorSet, x1: f64, zone: Interval, max_len: usize) -> Result<Base> {
    let in_zone = |y: f64| y >= zone.lo && y <= zone.hi;
    let mut width = zone.len();
    for _ in 0..40 {
        let target = Interval { lo: 1.0 - width, hi: 1.0 };
        let w = find_escape_word(set, x1, target, max_len)?;
        let z = eval_point(&w, x1, set)?;
        let mut ok = true;
        for gen in 0..2u16 {
            for inv in [false, true] {
                let l = Letter::new(gen, inv);
                let once = set.apply(l, z)?.0;
                let twice = set.apply(l, once)?.0;
                ok &= in_zone(once) && in_zone(twice);
            }
        }
        if ok {
            let (mut f, mut g) = (Letter::new(0, false), Letter::new(1, false));
            let swapped = set.apply(f, z)?.0 < z;
            if swapped {
                f = f.inverse();
                g = g.inverse();
            }
            let case = choose_case(set, f, g, z)?;
            if in_zone(case.z0) {
                return Ok((w, z, swapped, f, g, case));
            }
        }
        width *= 0.5;
    }
    Err(Error::CapExhausted("no escape word lands deep enough in the endpoint zone".into()))
}

/// Prepends `alpha` (index bit 0) or `beta` (bit 1). The child of parent `j`
/// by symbol `s` sits at `s * len + j`, so indices are the binary digits of
/// `U`, most significant first.
fn grow_level(prev: &Level, alpha: &Word, beta: &Word, p: usize, set: &GeneratorSet) -> Result<Level> {
    let len = prev.bad_suffix.len();
    let rows = par::try_map_range(2 * len, |idx| -> Result<(Vec<f64>, Vec<f64>, bool)> {
        let (s, j) = (idx / len, idx % len);
        let word = if s == 0 { alpha } else { beta };
        let mut v = Vec::with_capacity(p);
        let mut d = Vec::with_capacity(p);
        for i in 0..p {
            let (y, dy) = eval_word(word, prev.vals[j * p + i], set)?;
            v.push(y);
            d.push(dy * prev.ders[j * p + i]);
        }
        Ok((v, d, prev.bad_suffix[j]))
    })?;
    let mut level = Level {
        vals: Vec::with_capacity(2 * len * p),
        ders: Vec::with_capacity(2 * len * p),
        bad_suffix: Vec::with_capacity(2 * len),
    };
    for (v, d, bad) in rows {
        level.vals.extend(v);
        level.ders.extend(d);
        level.bad_suffix.push(bad);
    }
    Ok(level)
}

/// Sorts candidates by bucket vector `floor(h(x_i) * scale)` and then by
/// `h(x_1)`; returns the order, the occupied bucket count and how many
/// buckets hold two or more candidates.
fn bucket_order(level: &Level, p: usize, scale: f64) -> (Vec<(Vec<i64>, usize)>, usize, usize) {
    let mut keyed: Vec<(Vec<i64>, usize)> = par::map_range(level.bad_suffix.len(), |idx| {
        ((0..p).map(|i| (level.vals[idx * p + i] * scale).floor() as i64).collect(), idx)
    });
    par::sort_by(&mut keyed, |a, b| {
        a.0.cmp(&b.0).then_with(|| level.vals[a.1 * p].total_cmp(&level.vals[b.1 * p])).then_with(|| a.1.cmp(&b.1))
    });
    let mut buckets = 0;
    let mut colliding = 0;
    let mut start = 0;
    while start < keyed.len() {
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 == keyed[start].0 {
            end += 1;
        }
        buckets += 1;
        if end - start >= 2 {
            colliding += 1;
        }
        start = end;
    }
    (keyed, buckets, colliding)
}

/// Pairs bucket neighbours `(i1, i2)` with `h1(x_1) <= h2(x_1)` and ranks
/// them by the linearised pull-back displacement
/// `max_i |h2(x_i) - h1(x_i)| / h1'(x_i)`; returns the best `keep`.
fn rank_pairs(level: &Level, order: &[(Vec<i64>, usize)], p: usize, window: usize, keep: usize) -> Vec<(usize, usize)> {
    let mut scored: Vec<(f64, usize, usize)> = par::map_range(order.len(), |a| {
        let mut local = Vec::new();
        for b in (a + 1)..order.len().min(a + 1 + window) {
            if order[b].0 != order[a].0 {
                break;
            }
            let (i1, i2) = (order[a].1, order[b].1);
            let mut score: f64 = 0.0;
            for i in 0..p {
                let diff = (level.vals[i2 * p + i] - level.vals[i1 * p + i]).abs();
                score = score.max(diff / level.ders[i1 * p + i]);
            }
            local.push((score, i1, i2));
        }
        local
    })
    .into_iter()
    .flatten()
    .collect();
    par::sort_by(&mut scored, |a, b| a.0.total_cmp(&b.0).then_with(|| (a.1, a.2).cmp(&(b.1, b.2))));
    scored.truncate(keep);
    scored.into_iter().map(|(_, a, b)| (a, b)).collect()
}

/// Traces `g1^-1` from `z_i' = g1(y_i)` and `z_i'' = g2(y_i)` letter by
/// letter: every intermediate point should stay `>= y_1`, and the letter
/// derivatives at points in the zone should lie in `(1/theta, theta)`.
#[allow(clippy::too_many_arguments)]
fn pullback_audit(
    set: &GeneratorSet,
    pair: &FlattenPair,
    alpha: &Word,
    beta: &Word,
    y: &[f64],
    zone: Interval,
    theta: f64,
    audit: &mut FlattenAudit,
) -> Result<()> {
    let images = [alpha.clone(), beta.clone()];
    let ba = beta.concat_reduce(alpha);
    let g1 = pair.u1.substitute(&images).concat_reduce(&ba);
    let g2 = pair.u2.substitute(&images).concat_reduce(&ba);
    let g1_inv = g1.invert();
    let y1 = y[0];
    for &yi in y {
        for start in [eval_point(&g1, yi, set)?, eval_point(&g2, yi, set)?] {
            let mut x = start;
            for &l in g1_inv.letters().iter().rev() {
                let (next, d) = set.apply(l, x)?;
                if zone.contains(x) {
                    audit.zone_letters += 1;
                    if !(d > 1.0 / theta && d < theta) {
                        audit.zone_violations += 1;
                    }
                }
                x = next;
                audit.pullback_points += 1;
                if x < y1 - AUDIT_TOL {
                    audit.pullback_below_y1 += 1;
                }
            }
        }
    }
    Ok(())
}

/// `|S_k|` for `k = 0..=n`: reduced words `H` of length `k` all of whose
/// suffixes `u` satisfy `u(y) >= y`.
pub fn suffix_monotone_counts(set: &GeneratorSet, y: f64, n: usize) -> Result<Vec<u64>> {
    let mut tree = crate::words::WordTree::new(set.alphabet());
    let mut vals = vec![y];
    let mut counts = vec![1u64];
    for _ in 1..=n {
        let nodes = tree.grow()?.to_vec();
        let next = par::try_map_range(nodes.len(), |i| -> Result<f64> {
            let parent = vals[nodes[i].parent as usize];
            if parent.is_nan() {
                return Ok(f64::NAN);
            }
            let v = set.apply(nodes[i].letter, parent)?.0;
            Ok(if v >= y { v } else { f64::NAN })
        })?;
        counts.push(next.iter().filter(|v| !v.is_nan()).count() as u64);
        vals = next;
    }
    Ok(counts)
}
