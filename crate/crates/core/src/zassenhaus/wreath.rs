//! A bump `u` and a shift-like `v` whose translated supports are pairwise
//! disjoint, so that they generate `Z wr Z`, and the exact word problem in
//! that group.

use std::collections::BTreeMap;

use crate::action::{c1_dist_to_id, eval_point, GridSpec, SupEstimate};
use crate::certify::Interval;
use crate::diffeo::{GeneratorMap, GeneratorSet, WreathRoles, PHI_MAX, PHI_PRIME_MAX};
use crate::words::{Letter, Word};
use crate::{Error, Result};

/// Fraction of the displacement budget spent by each generator.
const BUDGET: f64 = 0.8;
/// The shift is supported on `[a - r, a + r]` with `r` this fraction of the
/// distance from the core centre `a` to the nearer endpoint.
const SHIFT_REACH: f64 = 0.98;
/// Required gap between `v(core.lo)` and `core.hi`.
const FUNDAMENTAL_MARGIN: f64 = 1e-6;
/// Grid used to certify `d_1` distances.
pub const CERT_GRID: usize = 100_000;
const COMMUTATOR_GRID: usize = 1000;

/// `(m, c)`: shift `m` and finitely supported coefficients `c`, with the
/// group law `(m1, c1)(m2, c2) = (m1 + m2, c1 + c2(. - m1))`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct WreathNormalForm {
    pub shift: i64,
    /// Nonzero coefficients only.
    pub coeffs: BTreeMap<i64, i64>,
}

impl WreathNormalForm {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.coeffs.is_empty()
    }

    fn bump(&mut self, position: i64, amount: i64) {
        let e = self.coeffs.entry(position).or_insert(0);
        *e += amount;
        if *e == 0 {
            self.coeffs.remove(&position);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.shift += other.shift;
        for (&k, &c) in &other.coeffs {
            out.bump(k + self.shift, c);
        }
        out
    }
}

/// Normal form of a word over the wreath alphabet: scanning left to right
/// with current offset `m`, `v^{+-1}` moves `m` and `u^{+-1}` adds `+-1` at
/// position `m`.
pub fn wreath_normal_form(w: &Word, set: &GeneratorSet) -> Result<WreathNormalForm> {
    let roles =
        set.wreath_roles().ok_or_else(|| Error::Precondition("generator set has no bump/shift roles".into()))?;
    let mut nf = WreathNormalForm::identity();
    for l in w.letters() {
        if l.gen() == roles.shift {
            nf.shift += l.sign();
        } else if l.gen() == roles.bump {
            let m = nf.shift;
            nf.bump(m, l.sign());
        } else {
            return Err(Error::UnknownGenerator(format!("letter index {} outside the wreath alphabet", l.gen())));
        }
    }
    Ok(nf)
}

#[derive(Debug, Clone)]
pub struct WreathPair {
    pub set: GeneratorSet,
    pub core: Interval,
    pub k: usize,
    pub d1_u: SupEstimate,
    pub d1_v: SupEstimate,
    /// `v^k(core)` for `k = -K..=K`.
    pub translates: Vec<Interval>,
    pub disjoint: bool,
    /// Largest grid displacement of `[v^i u v^-i, v^j u v^-j]`, `|i|, |j| <= K`.
    pub commutator_max: f64,
}

impl WreathPair {
    pub fn u(&self) -> &GeneratorMap {
        self.set.generator(0)
    }

    pub fn v(&self) -> &GeneratorMap {
        self.set.generator(1)
    }
}

/// Builds `u` (bump on the core) and `v` (a wide bump centred on the core
/// that moves `core.lo` past `core.hi`). Each uses at most 80% of the `d_1`
/// budget `epsilon`, certified on a `10^5` grid.
pub fn build_wreath_pair(epsilon: f64, core: Interval, k: usize) -> Result<WreathPair> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(core.lo > 0.0 && core.hi < 1.0) {
        return Err(Error::Precondition("core must lie inside (0, 1)".into()));
    }
    let len = core.len();
    let c_u = BUDGET * epsilon / (len * PHI_MAX + PHI_PRIME_MAX);
    let a = 0.5 * (core.lo + core.hi);
    let r = SHIFT_REACH * a.min(1.0 - a);
    let w = 2.0 * r;
    let c_v = BUDGET * epsilon / (w * PHI_MAX + PHI_PRIME_MAX);
    if c_u >= 5.0 || c_v >= 5.0 {
        return Err(Error::Construction(format!("epsilon {epsilon} too large for a bump pair")));
    }
    let u = GeneratorMap::polybump_on("u", c_u, core.lo, core.hi)?;
    let v = GeneratorMap::polybump_on("v", c_v, a - r, a + r)?;
    let push = v.eval(core.lo).0;
    if push <= core.hi + FUNDAMENTAL_MARGIN {
        return Err(Error::Construction(format!(
            "v moves core.lo only to {push}, not past core.hi = {}: translates of the core overlap \
             (feasible K = 0); shrink the core or raise epsilon",
            core.hi
        )));
    }
    let set = GeneratorSet::new(vec![u, v])?.with_wreath_roles(WreathRoles { bump: 0, shift: 1 })?;
    let grid = GridSpec::new(CERT_GRID)?;
    let u_word = Word::letter(Letter::new(0, false));
    let v_word = Word::letter(Letter::new(1, false));
    let d1_u = c1_dist_to_id(&u_word, grid, &set)?;
    let d1_v = c1_dist_to_id(&v_word, grid, &set)?;
    for (name, d) in [("u", &d1_u), ("v", &d1_v)] {
        if d.certified_bound >= epsilon {
            return Err(Error::Construction(format!(
                "certified d1({name}, id) = {} is not below {epsilon}",
                d.certified_bound
            )));
        }
    }

    let ki = k as i64;
    let mut translates = Vec::with_capacity(2 * k + 1);
    for j in -ki..=ki {
        let p = shift_power(j);
        let lo = eval_point(&p, core.lo, &set)?;
        let hi = eval_point(&p, core.hi, &set)?;
        translates.push(Interval { lo, hi });
    }
    let disjoint = translates.windows(2).all(|t| t[0].hi < t[1].lo);
    if !disjoint {
        let feasible = (1..=k)
            .take_while(|&kk| {
                let lo = k - kk;
                translates[lo..=k + kk].windows(2).all(|t| t[0].hi < t[1].lo)
            })
            .last()
            .unwrap_or(0);
        return Err(Error::Construction(format!(
            "translates v^k(core) overlap within |k| <= {k}; feasible K = {feasible}"
        )));
    }

    let mut commutator_max: f64 = 0.0;
    let cgrid = GridSpec::new(COMMUTATOR_GRID)?;
    for i in -ki..=ki {
        for j in (i + 1)..=ki {
            let a = conjugate_bump(i);
            let b = conjugate_bump(j);
            let comm = Word::reduce(
                a.letters()
                    .iter()
                    .chain(b.letters())
                    .copied()
                    .chain(a.invert().letters().iter().copied())
                    .chain(b.invert().letters().iter().copied()),
            );
            for x in cgrid.points() {
                commutator_max = commutator_max.max((eval_point(&comm, x, &set)? - x).abs());
            }
        }
    }
    Ok(WreathPair { set, core, k, d1_u, d1_v, translates, disjoint, commutator_max })
}

/// `v^j`.
pub fn shift_power(j: i64) -> Word {
    Word::reduce(std::iter::repeat_n(Letter::new(1, j < 0), j.unsigned_abs() as usize))
}

/// `v^j u v^-j`, the bump moved onto `v^j(core)`.
pub fn conjugate_bump(j: i64) -> Word {
    let p = shift_power(j);
    p.concat_reduce(&Word::letter(Letter::new(0, false))).concat_reduce(&p.invert())
}

/// Sizes of the element spheres `|B_k \ B_{k-1}|`, `k = 0..=n`, in the Cayley
/// graph of `Z wr Z` with generators `u`, `v`, by breadth-first search over
/// normal forms.
pub fn wreath_sphere_sizes(n: usize) -> Vec<u64> {
    use std::collections::HashSet;
    let letters: Vec<WreathNormalForm> = [(0, 1), (0, -1), (1, 0), (-1, 0)]
        .into_iter()
        .map(|(shift, c)| {
            let mut f = WreathNormalForm { shift, coeffs: BTreeMap::new() };
            if c != 0 {
                f.coeffs.insert(0, c);
            }
            f
        })
        .collect();
    let mut seen: HashSet<WreathNormalForm> = HashSet::new();
    seen.insert(WreathNormalForm::identity());
    let mut frontier = vec![WreathNormalForm::identity()];
    let mut sizes = vec![1u64];
    for _ in 1..=n {
        let mut next = Vec::new();
        for g in &frontier {
            for l in &letters {
                let h = g.mul(l);
                if seen.insert(h.clone()) {
                    next.push(h);
                }
            }
        }
        sizes.push(next.len() as u64);
        frontier = next;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn core() -> Interval {
        Interval::new(0.40, 0.41).unwrap()
    }

    #[test]
    fn normal_form_examples() {
        let pair = build_wreath_pair(0.1, core(), 3).unwrap();
        let set = &pair.set;
        let nf = wreath_normal_form(&Word::parse("v u v^-1", set).unwrap(), set).unwrap();
        assert_eq!(nf.shift, 0);
        assert_eq!(nf.coeffs, BTreeMap::from([(1, 1)]));
        let w = Word::reduce([Letter::new(0, false), Letter::new(0, true)]);
        assert!(wreath_normal_form(&w, set).unwrap().is_identity());
        let bad = Word::letter(Letter::new(3, false));
        assert!(wreath_normal_form(&bad, set).is_err());
    }

    #[test]
    fn pair_meets_budget_and_disjointness() {
        let pair = build_wreath_pair(0.1, core(), 3).unwrap();
        assert!(pair.d1_u.certified_bound < 0.1);
        assert!(pair.d1_v.certified_bound < 0.1);
        assert!(pair.disjoint);
        assert_eq!(pair.translates.len(), 7);
        assert!(pair.commutator_max <= 1e-12, "{}", pair.commutator_max);
    }

    #[test]
    fn wide_core_is_infeasible() {
        // Moving 0.40 past 0.44 needs sup |v' - 1| >= 0.1 by the mean value
        // theorem, which the d1 budget 0.1 cannot afford.
        let wide = Interval::new(0.40, 0.44).unwrap();
        assert!(matches!(build_wreath_pair(0.1, wide, 3), Err(Error::Construction(_))));
    }

    #[test]
    fn tiny_epsilon_is_infeasible() {
        let err = build_wreath_pair(1e-6, core(), 10).unwrap_err();
        assert!(matches!(err, Error::Construction(ref m) if m.contains("feasible K")));
    }

    #[test]
    fn element_spheres_match_word_enumeration() {
        let pair = build_wreath_pair(0.1, core(), 3).unwrap();
        let sizes = wreath_sphere_sizes(5);
        let mut seen = std::collections::HashSet::new();
        let counts: Vec<u64> = (0..=5)
            .map(|k| {
                crate::words::enumerate_sphere(2, k)
                    .filter(|w| seen.insert(wreath_normal_form(w, &pair.set).unwrap()))
                    .count() as u64
            })
            .collect();
        assert_eq!(sizes, counts);
        assert_eq!(&sizes[..3], &[1, 4, 12]);
    }

    #[test]
    fn shift_powers() {
        assert_eq!(shift_power(0), Word::empty());
        assert_eq!(shift_power(-2).len(), 2);
        assert_eq!(conjugate_bump(2).len(), 5);
    }
}
