//! Moving a point into an endpoint zone and choosing the base triple `(alpha, beta, z0)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::certify::Interval;
use crate::diffeo::GeneratorSet;
use crate::words::{Letter, Word};
use crate::{Error, Result};

/// Maximum number of nodes expanded by [`find_escape_word`].
pub const ESCAPE_NODE_CAP: usize = 1_000_000;

struct Node {
    dist: f64,
    value: f64,
    word: Word,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed: the heap pops the closest point, then the shortlex-least word.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.word.shortlex_cmp(&self.word))
    }
}

fn zone_distance(zone: &Interval, y: f64) -> f64 {
    if y < zone.lo {
        zone.lo - y
    } else if y > zone.hi {
        y - zone.hi
    } else {
        0.0
    }
}

/// Best-first search for a reduced word `W` of length `<= max_len` with
/// `W(start)` in `zone`. Words grow on the left (the new letter is applied
/// last).
pub fn find_escape_word(set: &GeneratorSet, start: f64, zone: Interval, max_len: usize) -> Result<Word> {
    if !(start > 0.0 && start < 1.0) {
        return Err(Error::Precondition(format!("start point {start} must lie in (0, 1)")));
    }
    if !(zone.lo > 0.0) {
        return Err(Error::Precondition(format!("target zone {zone} must lie in (0, 1]")));
    }
    let alphabet = set.alphabet();
    let mut heap = BinaryHeap::new();
    heap.push(Node { dist: zone_distance(&zone, start), value: start, word: Word::empty() });
    let mut best = (f64::INFINITY, start);
    let mut expanded = 0usize;
    while let Some(node) = heap.pop() {
        if node.dist == 0.0 {
            return Ok(node.word);
        }
        if node.dist < best.0 {
            best = (node.dist, node.value);
        }
        expanded += 1;
        if expanded > ESCAPE_NODE_CAP {
            break;
        }
        if node.word.len() >= max_len {
            continue;
        }
        let first = node.word.letters().first().copied();
        for &l in &alphabet {
            if first == Some(l.inverse()) {
                continue;
            }
            let y = set.apply(l, node.value)?.0.clamp(0.0, 1.0);
            let mut letters = Vec::with_capacity(node.word.len() + 1);
            letters.push(l);
            letters.extend_from_slice(node.word.letters());
            heap.push(Node { dist: zone_distance(&zone, y), value: y, word: Word::reduce(letters) });
        }
    }
    Err(Error::CapExhausted(format!(
        "no word of length <= {max_len} moves {start} into {zone}; closest point reached {} (distance {})",
        best.1, best.0
    )))
}

/// `(alpha, beta, z0)` with `z0 <= alpha(z0) <= beta alpha(z0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseChoice {
    pub case: u8,
    pub alpha: Word,
    pub beta: Word,
    pub z0: f64,
}

/// Picks the first valid case for letters `f`, `g` at `z`, which must satisfy
/// `f(z) >= z`:
/// 1. `f(z) <= gf(z)`: `(f, g, z)`;
/// 2. `z <= gf(z)`: `(gf, f, z)`;
/// 3. `gf(z) <= z`: `(f^-1 g^-1, g^-1, gf(z))`.
pub fn choose_case(set: &GeneratorSet, f: Letter, g: Letter, z: f64) -> Result<CaseChoice> {
    let fz = set.apply(f, z)?.0;
    if fz < z {
        return Err(Error::Precondition(format!("f(z) = {fz} < z = {z}; swap to inverses first")));
    }
    let gfz = set.apply(g, fz)?.0;
    let (case, alpha, beta, z0) = if fz <= gfz {
        (1, vec![f], vec![g], z)
    } else if z <= gfz {
        (2, vec![g, f], vec![f], z)
    } else {
        (3, vec![f.inverse(), g.inverse()], vec![g.inverse()], gfz)
    };
    Ok(CaseChoice { case, alpha: Word::reduce(alpha), beta: Word::reduce(beta), z0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::eval_point;
    use crate::diffeo::{presets::pp, GeneratorMap};

    #[test]
    fn start_in_zone_gives_empty_word() {
        let zone = Interval::new(0.2, 0.3).unwrap();
        assert_eq!(find_escape_word(&pp(), 0.25, zone, 5).unwrap(), Word::empty());
    }

    #[test]
    fn reference_pair_climbs_with_inverse_letters() {
        let set = pp();
        let zone = Interval::new(0.9, 1.0).unwrap();
        let w = find_escape_word(&set, 0.1, zone, 20).unwrap();
        assert!(zone.contains(eval_point(&w, 0.1, &set).unwrap()));
        assert!(w.letters()[0].is_inverse());
    }

    #[test]
    fn short_cap_exhausts() {
        let set = GeneratorSet::new(vec![
            GeneratorMap::mobius("a", 1.05).unwrap(),
            GeneratorMap::polybump("b", 0.1).unwrap(),
        ])
        .unwrap();
        let zone = Interval::new(0.999999, 1.0).unwrap();
        assert!(matches!(find_escape_word(&set, 0.5, zone, 3), Err(Error::CapExhausted(_))));
    }

    #[test]
    fn case_selection() {
        // f(z) >= z and f(z) <= gf(z): case 1.
        let up =
            GeneratorSet::new(vec![GeneratorMap::mobius("f", 2.0).unwrap(), GeneratorMap::mobius("g", 1.5).unwrap()])
                .unwrap();
        let (f, g) = (Letter::new(0, false), Letter::new(1, false));
        let c = choose_case(&up, f, g, 0.5).unwrap();
        assert_eq!((c.case, c.z0), (1, 0.5));
        // g pulls back, but not below z: case 2.
        let mid =
            GeneratorSet::new(vec![GeneratorMap::mobius("f", 2.0).unwrap(), GeneratorMap::mobius("g", 0.9).unwrap()])
                .unwrap();
        let c = choose_case(&mid, f, g, 0.5).unwrap();
        assert_eq!(c.case, 2);
        assert_eq!(c.alpha.letters(), &[g, f]);
        // g pulls far back: case 3.
        let down =
            GeneratorSet::new(vec![GeneratorMap::mobius("f", 1.2).unwrap(), GeneratorMap::mobius("g", 0.5).unwrap()])
                .unwrap();
        let c = choose_case(&down, f, g, 0.5).unwrap();
        assert_eq!(c.case, 3);
        assert!(c.z0 < 0.5);
        for set in [&up, &mid, &down] {
            let c = choose_case(set, f, g, 0.5).unwrap();
            let a = eval_point(&c.alpha, c.z0, set).unwrap();
            let ba = eval_point(&c.beta, a, set).unwrap();
            assert!(c.z0 <= a && a <= ba);
        }
        assert!(choose_case(&down, g, f, 0.5).is_err());
    }
}
