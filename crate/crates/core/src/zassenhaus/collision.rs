//! Derivative collisions: two words of equal length whose values at `x0`
//! share a bucket of width `lambda^-n` and whose derivatives nearly agree;
//! pulling one back by the other gives `V` with `V'(x0)` close to 1.

use crate::action::{apply_word, c1_dist_to_id, eval_word, GridSpec, SupEstimate};
use crate::diffeo::GeneratorSet;
use crate::numeric::rel_err;
use crate::par;
use crate::words::{Letter, Word, WordTree};
use crate::zassenhaus::transport::BALL_GRID;
use crate::zassenhaus::{distinctness, Caps, Distinctness, SearchStatus};
use crate::{Error, Result};

/// Relative tolerance of the chain-rule identity audit.
pub const CHAIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionParams {
    pub x0: f64,
    pub c: f64,
    pub c1: f64,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl CollisionParams {
    /// Fills the auxiliary constants: `eta` is the midpoint of
    /// `(1, lambda/(1+epsilon))`, `lambda1` sits 2.5% above
    /// `lambda (1+epsilon)/(1-epsilon)`, `lambda2 = 1.04 lambda1`, and
    /// `C1 = 0.9 min(1 - sqrt(1-C), sqrt(1+C) - 1)`.
    pub fn new(x0: f64, lambda: f64, c: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Precondition(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Precondition(format!("C must lie in (0, 1), got {c}")));
        }
        let lambda1 = 1.025 * lambda * (1.0 + epsilon) / (1.0 - epsilon);
        let p = Self {
            x0,
            c,
            c1: 0.9 * (1.0 - (1.0 - c).sqrt()).min((1.0 + c).sqrt() - 1.0),
            lambda,
            lambda1,
            lambda2: 1.04 * lambda1,
            eta: 0.5 * (1.0 + lambda / (1.0 + epsilon)),
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn l(&self) -> f64 {
        1.0 + self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Precondition(m));
        if !(self.x0 > 0.0 && self.x0 < 1.0) {
            return fail(format!("x0 = {} must lie in (0, 1)", self.x0));
        }
        if !(1.0 < self.lambda && self.lambda < self.lambda1 && self.lambda1 < self.lambda2) {
            return fail("need 1 < lambda < lambda1 < lambda2".into());
        }
        let top = self.lambda / (1.0 + self.epsilon);
        if !(1.0 < self.eta && self.eta < top) {
            return fail(format!("eta must lie in (1, lambda/(1+epsilon)) = (1, {top})"));
        }
        if !((1.0 + self.epsilon) / (1.0 - self.epsilon) < self.lambda1 / self.lambda) {
            return fail("need (1+epsilon)/(1-epsilon) < lambda1/lambda".into());
        }
        let (lo, hi) = ((1.0 - self.c1).powi(2), (1.0 + self.c1).powi(2));
        if !(self.c1 > 0.0 && 1.0 - self.c < lo && hi < 1.0 + self.c) {
            return fail(format!("need 1 - C < (1 - C1)^2 and (1 + C1)^2 < 1 + C with C1 = {}", self.c1));
        }
        Ok(())
    }

    /// Least `n` with `1 - C1 < (1 - eta^-n)^n` and `(1 + eta^-n)^n < 1 + C1`,
    /// searched up to `10^7`.
    pub fn n1(&self) -> Option<usize> {
        let (lo, hi) = ((1.0 - self.c1).ln(), (1.0 + self.c1).ln());
        (1..10_000_000usize).find(|&n| {
            let t = (-(n as f64) * self.eta.ln()).exp();
            let nf = n as f64;
            t < 1.0 && nf * (-t).ln_1p() > lo && nf * t.ln_1p() < hi
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionLevel {
    pub n: usize,
    pub sphere_size: u64,
    pub occupied_buckets: usize,
    pub max_occupancy: usize,
    /// Buckets with at least `lambda1^n / lambda^n` words.
    pub dense_buckets: usize,
    pub pairs_tested: usize,
}

/// Termwise comparison of the letter derivatives of `g1^-1` along the
/// orbits of `y0 = g1(x0)` and `z0 = g2(x0)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChainAudit {
    pub steps: usize,
    /// `|y_k - z_k| <= L^k / lambda^n` failures.
    pub distance_violations: usize,
    /// `|h'(y_k)/h'(z_k) - 1| <= M L^(k+1) / lambda^n` failures.
    pub ratio_violations: usize,
    /// Largest `|ratio - 1|` relative to its allowance.
    pub worst_ratio_use: f64,
    /// Relative error of `prod ratios = (g1^-1)'(y0) / (g1^-1)'(z0)`.
    pub product_identity_err: f64,
    /// Relative error between `V'(x0)` from the reduced word and from
    /// `(g1^-1)'(z0) g2'(x0)`.
    pub v_identity_err: f64,
}

impl ChainAudit {
    pub fn passed(&self) -> bool {
        self.distance_violations == 0
            && self.ratio_violations == 0
            && self.product_identity_err <= CHAIN_TOL
            && self.v_identity_err <= CHAIN_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionPair {
    pub n: usize,
    pub bucket: i64,
    pub g1: Word,
    pub g2: Word,
    pub g1_x0: f64,
    pub g2_x0: f64,
    /// `g1'(x0) / g2'(x0)`.
    pub deriv_ratio: f64,
    pub v: Word,
    /// `V'(x0)` from the chain product of the reduced word.
    pub v_deriv: f64,
    pub distinct: Distinctness,
    pub audit: ChainAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    pub params: CollisionParams,
    pub n1: Option<usize>,
    pub d1: Vec<SupEstimate>,
    pub levels: Vec<CollisionLevel>,
    pub pair: Option<CollisionPair>,
    pub status: SearchStatus,
}

/// Searches spheres `n = 1..=n_max` for a pair satisfying both collision
/// conditions whose pull-back has `V'(x0)` in `(1 - C, 1 + C)`.
pub fn derivative_collision_search(
    set: &GeneratorSet,
    params: &CollisionParams,
    caps: &Caps,
) -> Result<CollisionReport> {
    params.validate()?;
    let grid = GridSpec::new(BALL_GRID)?;
    let mut d1 = Vec::with_capacity(set.len());
    for (i, g) in set.generators().iter().enumerate() {
        let est = c1_dist_to_id(&Word::letter(Letter::new(i as u16, false)), grid, set)?;
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

    let mut tree = WordTree::new(set.alphabet());
    let mut prev: Vec<(f64, f64)> = vec![(params.x0, 1.0)];
    let mut levels = Vec::new();
    let mut pair = None;
    let mut status = SearchStatus::NotFound;
    let (lo_c1, hi_c1) = ((1.0 - params.c1).ln(), (1.0 + params.c1).ln());
    for n in 1..=caps.n_max {
        if caps.expired() {
            status = SearchStatus::TimeBudget;
            break;
        }
        if tree.node_count() + prev.len() * 2 * set.len() > caps.node_cap {
            status = SearchStatus::CapExhausted;
            break;
        }
        let nodes = tree.grow()?.to_vec();
        let vals = par::try_map_range(nodes.len(), |i| -> Result<(f64, f64)> {
            let node = nodes[i];
            let (y, d) = prev[node.parent as usize];
            let (v, dv) = set.apply(node.letter, y)?;
            Ok((v, dv * d))
        })?;
        let scale = params.lambda.powi(n as i32);
        let mut order: Vec<(i64, f64, usize)> =
            vals.iter().enumerate().map(|(i, &(v, d))| ((v * scale).floor() as i64, d.ln(), i)).collect();
        par::sort_by(&mut order, |a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let dense = params.lambda1.powi(n as i32) / scale;
        let mut level = CollisionLevel {
            n,
            sphere_size: vals.len() as u64,
            occupied_buckets: 0,
            max_occupancy: 0,
            dense_buckets: 0,
            pairs_tested: 0,
        };
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && order[end].0 == order[start].0 {
                end += 1;
            }
            let size = end - start;
            level.occupied_buckets += 1;
            level.max_occupancy = level.max_occupancy.max(size);
            if size as f64 >= dense {
                level.dense_buckets += 1;
            }
            if pair.is_none() {
                for a in start..end.saturating_sub(1) {
                    let (j, l1, i1) = order[a];
                    let (_, l2, i2) = order[a + 1];
                    let log_ratio = l1 - l2;
                    if !(log_ratio > lo_c1 && log_ratio < hi_c1) {
                        continue;
                    }
                    level.pairs_tested += 1;
                    let g1 = tree.word(n, i1);
                    let g2 = tree.word(n, i2);
                    let distinct = distinctness(set, &g1, &g2)?;
                    if distinct == Distinctness::Equal {
                        continue;
                    }
                    let found = examine(set, params, n, j, g1, g2, vals[i1], vals[i2], distinct)?;
                    if found.v_deriv > 1.0 - params.c && found.v_deriv < 1.0 + params.c {
                        pair = Some(found);
                        break;
                    }
                }
            }
            start = end;
        }
        levels.push(level);
        if pair.is_some() {
            status = SearchStatus::Success;
            break;
        }
        prev = vals;
    }
    Ok(CollisionReport { params: *params, n1: params.n1(), d1, levels, pair, status })
}

#[allow(clippy::too_many_arguments)]
fn examine(
    set: &GeneratorSet,
    params: &CollisionParams,
    n: usize,
    bucket: i64,
    g1: Word,
    g2: Word,
    at1: (f64, f64),
    at2: (f64, f64),
    distinct: Distinctness,
) -> Result<CollisionPair> {
    let inv = g1.invert();
    let ty = apply_word(&inv, at1.0, set)?;
    let tz = apply_word(&inv, at2.0, set)?;
    let lip = set.alphabet_lip();
    let l = params.l();
    let scale = params.lambda.powi(n as i32);
    let mut audit = ChainAudit { steps: ty.letter_derivs.len(), ..ChainAudit::default() };
    let mut product = 1.0;
    for k in 0..audit.steps {
        let allowance_d = l.powi(k as i32) / scale;
        if (ty.points[k] - tz.points[k]).abs() > allowance_d {
            audit.distance_violations += 1;
        }
        let ratio = ty.letter_derivs[k] / tz.letter_derivs[k];
        product *= ratio;
        let allowance_r = lip * l.powi(k as i32 + 1) / scale;
        let used = (ratio - 1.0).abs() / allowance_r;
        audit.worst_ratio_use = audit.worst_ratio_use.max(used);
        if used > 1.0 {
            audit.ratio_violations += 1;
        }
    }
    audit.product_identity_err = rel_err(product, ty.chain_product / tz.chain_product);
    let v = inv.concat_reduce(&g2);
    let (_, v_deriv) = eval_word(&v, params.x0, set)?;
    audit.v_identity_err = rel_err(v_deriv, tz.chain_product * at2.1);
    Ok(CollisionPair {
        n,
        bucket,
        g1,
        g2,
        g1_x0: at1.0,
        g2_x0: at2.0,
        deriv_ratio: at1.1 / at2.1,
        v,
        v_deriv,
        distinct,
        audit,
    })
}
