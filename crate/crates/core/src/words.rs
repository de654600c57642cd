//! Free-word algebra over a symmetrized generator alphabet.
//!
//! Words are flat letter arrays, always freely reduced. The canonical order
//! on letters is `(generator index, sign)` with the positive letter first, and
//! on words it is shortlex (length, then lexicographic). Every tie-break
//! downstream uses these orders.

use std::cmp::Ordering;
use std::fmt;

use crate::diffeo::GeneratorSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    gen: u16,
    inv: bool,
}

impl Letter {
    pub const fn new(gen: u16, inv: bool) -> Self {
        Self { gen, inv }
    }

    pub const fn gen(self) -> u16 {
        self.gen
    }

    pub const fn is_inverse(self) -> bool {
        self.inv
    }

    pub const fn inverse(self) -> Self {
        Self { gen: self.gen, inv: !self.inv }
    }

    /// Position in the canonical alphabet `f, f^-1, g, g^-1, ...`.
    pub const fn index(self) -> usize {
        2 * self.gen as usize + self.inv as usize
    }

    pub const fn from_index(index: usize) -> Self {
        Self { gen: (index / 2) as u16, inv: index % 2 == 1 }
    }

    pub const fn sign(self) -> i64 {
        if self.inv {
            -1
        } else {
            1
        }
    }
}

/// A freely reduced word. Letters are stored left to right; as a map the
/// word `h_n ... h_1` applies `h_1` first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn letter(l: Letter) -> Self {
        Self { letters: vec![l] }
    }

    /// Free reduction by a single left-to-right stack pass.
    pub fn reduce<I: IntoIterator<Item = Letter>>(seq: I) -> Self {
        let mut letters: Vec<Letter> = Vec::new();
        for l in seq {
            if letters.last() == Some(&l.inverse()) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Self { letters }
    }

    /// Reduces after checking every letter against `set`.
    pub fn reduce_checked(seq: &[Letter], set: &GeneratorSet) -> Result<Self> {
        if let Some(bad) = seq.iter().find(|l| l.gen() as usize >= set.len()) {
            return Err(Error::UnknownGenerator(format!("#{}", bad.gen())));
        }
        Ok(Self::reduce(seq.iter().copied()))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| w[1] != w[0].inverse())
    }

    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|l| !l.is_inverse())
    }

    pub fn invert(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    /// `reduce(self * other)`; only the junction can cancel.
    pub fn concat_reduce(&self, other: &Word) -> Self {
        let mut left = self.letters.clone();
        let mut skip = 0;
        for l in &other.letters {
            if left.last() == Some(&l.inverse()) {
                left.pop();
                skip += 1;
            } else {
                break;
            }
        }
        left.extend_from_slice(&other.letters[skip..]);
        Self { letters: left }
    }

    /// The suffixes of lengths `1..=len`, shortest first.
    pub fn suffixes(&self) -> Vec<Word> {
        let n = self.len();
        (1..=n).map(|k| Word { letters: self.letters[n - k..].to_vec() }).collect()
    }

    /// Replaces each letter `a_i^{+-1}` by `images[i]^{+-1}` and reduces.
    pub fn substitute(&self, images: &[Word]) -> Self {
        let mut out = Vec::new();
        for l in &self.letters {
            let img = &images[l.gen() as usize];
            if l.is_inverse() {
                out.extend(img.invert().letters);
            } else {
                out.extend_from_slice(&img.letters);
            }
        }
        Self::reduce(out)
    }

    pub fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.letters.cmp(&other.letters))
    }

    /// Renders as `f g^-1 f`; the empty word is `1`.
    pub fn display<'a>(&'a self, set: &'a GeneratorSet) -> WordDisplay<'a> {
        WordDisplay { word: self, set }
    }

    /// Parses the text form. Tokens are `x`, `x^-1` or `x^k` for a generator
    /// id `x` and integer `k`; `1` alone is the empty word.
    pub fn parse(text: &str, set: &GeneratorSet) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || (text == "1" && set.index_of("1").is_err()) {
            return Ok(Self::empty());
        }
        let mut letters = Vec::new();
        for token in text.split_whitespace() {
            let (name, power) = match token.split_once('^') {
                Some((name, p)) => {
                    let k: i64 = p.parse().map_err(|_| Error::WordSyntax(text.to_string()))?;
                    (name, k)
                }
                None => (token, 1),
            };
            let gen = set.index_of(name)?;
            let l = Letter::new(gen, power < 0);
            letters.extend(std::iter::repeat_n(l, power.unsigned_abs() as usize));
        }
        Ok(Self::reduce(letters))
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Self::reduce(v)
    }
}

pub struct WordDisplay<'a> {
    word: &'a Word,
    set: &'a GeneratorSet,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.word.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", self.set.generator(l.gen()).id())?;
            if l.is_inverse() {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

/// Iterative enumeration of the reduced words of length exactly `n` over
/// `num_gens` generators, in lexicographic order.
///
/// The enumerator is a plain description: cloning restarts it, and
/// [`SphereIter::with_prefix`] restricts it to one fixed-prefix block so that
/// disjoint blocks can be consumed independently.
#[derive(Debug, Clone)]
pub struct SphereIter {
    alphabet: usize,
    n: usize,
    prefix_len: usize,
    current: Vec<usize>,
    done: bool,
}

impl SphereIter {
    pub fn new(num_gens: usize, n: usize) -> Self {
        Self::with_prefix(num_gens, n, &Word::empty())
    }

    /// Words of length `n` starting with the reduced `prefix`.
    pub fn with_prefix(num_gens: usize, n: usize, prefix: &Word) -> Self {
        let alphabet = 2 * num_gens;
        let mut it = Self {
            alphabet,
            n,
            prefix_len: prefix.len(),
            current: prefix.letters().iter().map(|l| l.index()).collect(),
            done: prefix.len() > n || alphabet == 0 && n > 0,
        };
        if !it.done {
            // Fill the tail with the smallest admissible letters.
            while it.current.len() < n {
                let next = it.smallest_after(it.current.last().copied(), 0);
                match next {
                    Some(c) => it.current.push(c),
                    None => {
                        it.done = true;
                        break;
                    }
                }
            }
        }
        it
    }

    fn smallest_after(&self, prev: Option<usize>, from: usize) -> Option<usize> {
        (from..self.alphabet).find(|&c| prev.is_none_or(|p| c != (p ^ 1)))
    }

    fn advance(&mut self) {
        let mut pos = self.current.len();
        loop {
            if pos == self.prefix_len {
                self.done = true;
                return;
            }
            pos -= 1;
            let prev = if pos == 0 { None } else { Some(self.current[pos - 1]) };
            if let Some(c) = self.smallest_after(prev, self.current[pos] + 1) {
                self.current[pos] = c;
                self.current.truncate(pos + 1);
                while self.current.len() < self.n {
                    let last = self.current.last().copied();
                    let c = self.smallest_after(last, 0).expect("alphabet of size >= 2");
                    self.current.push(c);
                }
                return;
            }
        }
    }
}

impl Iterator for SphereIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let w = Word { letters: self.current.iter().map(|&c| Letter::from_index(c)).collect() };
        self.advance();
        Some(w)
    }
}

/// All reduced words of length `n`, lexicographic.
pub fn enumerate_sphere(num_gens: usize, n: usize) -> SphereIter {
    SphereIter::new(num_gens, n)
}

/// The reduced prefixes of length `k` (the parallel work blocks for spheres
/// of radius `>= k`).
pub fn prefix_blocks(num_gens: usize, k: usize) -> Vec<Word> {
    enumerate_sphere(num_gens, k).collect()
}

/// Positive words over the two symbols `a = generator 0` and
/// `b = generator 1`, of lengths `1..=max_len` in shortlex order. There are
/// `2^(max_len + 1) - 2` of them.
pub fn enumerate_positive(max_len: usize) -> impl Iterator<Item = Word> {
    (1..=max_len).flat_map(|k| (0u64..(1u64 << k)).map(move |bits| positive_word(k, bits)))
}

/// The positive word of length `k` whose letters, read left to right, are the
/// binary digits of `bits` (most significant first; 0 = `a`, 1 = `b`).
pub fn positive_word(k: usize, bits: u64) -> Word {
    Word { letters: (0..k).map(|i| Letter::new(((bits >> (k - 1 - i)) & 1) as u16, false)).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: u32,
    pub letter: Letter,
}

/// Reduced words organised by length, each level obtained from the previous
/// one by prepending a letter. Levels come out in lexicographic order, and a
/// value attached to a word can be computed from its parent's value by one
/// letter application.
#[derive(Debug, Clone)]
pub struct WordTree {
    alphabet: Vec<Letter>,
    levels: Vec<Vec<TreeNode>>,
}

impl WordTree {
    pub fn new(alphabet: Vec<Letter>) -> Self {
        let mut alphabet = alphabet;
        alphabet.sort();
        let root = TreeNode { parent: u32::MAX, letter: Letter::new(u16::MAX, false) };
        Self { alphabet, levels: vec![vec![root]] }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[TreeNode] {
        &self.levels[n]
    }

    /// Appends level `depth + 1`.
    pub fn grow(&mut self) -> Result<&[TreeNode]> {
        let n = self.depth();
        let prev = &self.levels[n];
        let mut next = Vec::with_capacity(prev.len() * self.alphabet.len());
        for &s in &self.alphabet {
            for (j, node) in prev.iter().enumerate() {
                if n == 0 || node.letter != s.inverse() {
                    next.push(TreeNode { parent: j as u32, letter: s });
                }
            }
        }
        if next.len() > u32::MAX as usize {
            return Err(Error::CapExhausted("word tree level exceeds u32 indexing".into()));
        }
        self.levels.push(next);
        Ok(&self.levels[n + 1])
    }

    pub fn word(&self, level: usize, index: usize) -> Word {
        let mut letters = Vec::with_capacity(level);
        let mut idx = index;
        for n in (1..=level).rev() {
            let node = self.levels[n][idx];
            letters.push(node.letter);
            idx = node.parent as usize;
        }
        Word { letters }
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Growth data of the free reduced-word spheres or of element spheres.
#[derive(Debug, Clone, PartialEq)]
pub struct BallStats {
    pub n: usize,
    pub sphere_sizes: Vec<u64>,
    pub omega_estimate: f64,
}

impl BallStats {
    /// `sphere_sizes[k]` is the size of the sphere of radius `k`, `k = 0..=n`.
    pub fn from_sphere_sizes(sphere_sizes: Vec<u64>) -> Self {
        let n = sphere_sizes.len().saturating_sub(1);
        let ball: u64 = sphere_sizes.iter().sum();
        let omega_estimate = if n == 0 { 1.0 } else { (ball as f64).powf(1.0 / n as f64).max(1.0) };
        Self { n, sphere_sizes, omega_estimate }
    }
}

/// Sphere sizes of reduced words up to radius `n`, counted by enumeration.
pub fn free_ball_stats(num_gens: usize, n: usize) -> BallStats {
    BallStats::from_sphere_sizes((0..=n).map(|k| enumerate_sphere(num_gens, k).count() as u64).collect())
}
