//! Generator families: orientation-preserving diffeomorphisms of `[0, 1]`
//! with exact evaluation and certified derivative bounds.

mod closed;
mod solve;
mod spline;

pub use closed::{Mobius, PolyBump, PHI_MAX, PHI_PRIME_MAX};
pub use spline::Spline;

use crate::words::Letter;
use crate::{Error, Result};

/// Global derivative data: `der_inf <= f' <= der_sup` and
/// `|f'(y) - f'(z)| <= der_lip |y - z|` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub der_inf: f64,
    pub der_sup: f64,
    pub der_lip: f64,
}

impl Bounds {
    /// Bounds of the inverse map, from `(f^-1)' = 1 / f' o f^-1` and
    /// `(f^-1)'' = -f'' / f'^3`.
    pub fn inverse(&self) -> Self {
        Self {
            der_inf: 1.0 / self.der_sup,
            der_sup: 1.0 / self.der_inf,
            der_lip: self.der_lip / (self.der_inf * self.der_inf * self.der_inf),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Mobius(Mobius),
    PolyBump(PolyBump),
    Spline(Spline),
    /// Knot-wise convex blend `x_i + t (y_i - x_i)` of a spline with the identity.
    Blend {
        base: String,
        t: f64,
        spline: Spline,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Mobius(_) => "mobius",
            Family::PolyBump(_) => "polybump",
            Family::Spline(_) => "spline",
            Family::Blend { .. } => "blend",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMap {
    id: String,
    family: Family,
    bounds: Bounds,
}

impl GeneratorMap {
    fn build(id: impl Into<String>, family: Family) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.contains(|c: char| c.is_whitespace() || c == '^') {
            return Err(Error::Construction(format!("invalid generator id `{id}`")));
        }
        let (der_inf, der_sup) = deriv_range(&family, 0.0, 1.0);
        let der_lip = match &family {
            Family::Mobius(m) => m.second_deriv_max(),
            Family::PolyBump(b) => b.second_deriv_max(),
            Family::Spline(s) | Family::Blend { spline: s, .. } => s.second_deriv_max(),
        };
        if !(der_inf > 0.0) {
            return Err(Error::Construction(format!("generator `{id}` has derivative infimum {der_inf}")));
        }
        Ok(Self { id, family, bounds: Bounds { der_inf, der_sup, der_lip } })
    }

    pub fn mobius(id: impl Into<String>, lambda: f64) -> Result<Self> {
        Self::build(id, Family::Mobius(Mobius::new(lambda)?))
    }

    /// Endpoint-flat bump `x + c x^2 (1-x)^2`.
    pub fn polybump(id: impl Into<String>, c: f64) -> Result<Self> {
        Self::polybump_on(id, c, 0.0, 1.0)
    }

    /// Bump supported on `[lo, hi]`, the identity elsewhere.
    pub fn polybump_on(id: impl Into<String>, c: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::build(id, Family::PolyBump(PolyBump::new(c, lo, hi)?))
    }

    pub fn spline(id: impl Into<String>, knots: &[(f64, f64)], start_slope: f64, end_slope: f64) -> Result<Self> {
        Self::build(id, Family::Spline(Spline::new(knots, start_slope, end_slope)?))
    }

    pub fn identity(id: impl Into<String>) -> Result<Self> {
        Self::spline(id, &[(0.0, 0.0), (1.0, 1.0)], 1.0, 1.0)
    }

    /// Blends the knots of a spline generator towards the diagonal; `t = 0`
    /// gives the identity, `t = 1` reproduces the knots of `base`.
    pub fn blend(id: impl Into<String>, base: &GeneratorMap, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Construction(format!("blend weight {t} outside [0, 1]")));
        }
        let source = match &base.family {
            Family::Spline(s) | Family::Blend { spline: s, .. } => s,
            other => {
                return Err(Error::Construction(format!(
                    "blend needs a spline base, `{}` is {}",
                    base.id,
                    other.name()
                )))
            }
        };
        let knots: Vec<(f64, f64)> = source.knots().map(|(x, y)| (x, x + t * (y - x))).collect();
        let start = 1.0 + t * (source.start_slope() - 1.0);
        let end = 1.0 + t * (source.end_slope() - 1.0);
        let spline = Spline::new(&knots, start, end)?;
        Self::build(id, Family::Blend { base: base.id.clone(), t, spline })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn global_bounds(&self) -> Bounds {
        self.bounds
    }

    /// Value and derivative without a domain check.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match &self.family {
            Family::Mobius(m) => m.eval(x),
            Family::PolyBump(b) => b.eval(x),
            Family::Spline(s) | Family::Blend { spline: s, .. } => s.eval(x),
        }
    }

    pub fn eval_value(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.eval(x).0)
    }

    pub fn eval_deriv(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.eval(x).1)
    }

    pub fn eval_inverse(&self, y: f64) -> Result<f64> {
        check_domain(y)?;
        self.inverse_unchecked(y)
    }

    #[inline]
    fn inverse_unchecked(&self, y: f64) -> Result<f64> {
        match &self.family {
            Family::Mobius(m) => Ok(m.inverse(y)),
            Family::PolyBump(b) => b.inverse(y),
            Family::Spline(s) | Family::Blend { spline: s, .. } => s.inverse(y),
        }
    }

    /// Value and derivative of `f` (`inverse == false`) or `f^-1` at `x`.
    #[inline]
    pub fn apply(&self, inverse: bool, x: f64) -> Result<(f64, f64)> {
        if inverse {
            let y = self.inverse_unchecked(x)?;
            Ok((y, 1.0 / self.eval(y).1))
        } else {
            Ok(self.eval(x))
        }
    }

    /// Exact range of `f'` on `[lo, hi]`.
    pub fn deriv_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        deriv_range(&self.family, lo, hi)
    }
}

fn deriv_range(family: &Family, lo: f64, hi: f64) -> (f64, f64) {
    match family {
        Family::Mobius(m) => m.deriv_range(lo, hi),
        Family::PolyBump(b) => b.deriv_range(lo, hi),
        Family::Spline(s) | Family::Blend { spline: s, .. } => s.deriv_range(lo, hi),
    }
}

#[inline]
pub(crate) fn check_domain(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { x })
    }
}

/// Marks a two-generator set as a bump/shift pair realising `Z wr Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WreathRoles {
    pub bump: u16,
    pub shift: u16,
}

/// A finite generating set `f_1, ..., f_s`; the alphabet is the symmetrized
/// set `{f_1, f_1^-1, ..., f_s, f_s^-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    gens: Vec<GeneratorMap>,
    wreath: Option<WreathRoles>,
}

impl GeneratorSet {
    pub fn new(gens: Vec<GeneratorMap>) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::Construction("empty generator set".into()));
        }
        if gens.len() > u16::MAX as usize / 2 {
            return Err(Error::Construction("too many generators".into()));
        }
        for (i, g) in gens.iter().enumerate() {
            if gens[..i].iter().any(|h| h.id == g.id) {
                return Err(Error::Construction(format!("duplicate generator id `{}`", g.id)));
            }
        }
        Ok(Self { gens, wreath: None })
    }

    pub fn with_wreath_roles(mut self, roles: WreathRoles) -> Result<Self> {
        let n = self.gens.len() as u16;
        if self.gens.len() != 2 || roles.bump >= n || roles.shift >= n || roles.bump == roles.shift {
            return Err(Error::Construction("wreath roles need two distinct generators".into()));
        }
        self.wreath = Some(roles);
        Ok(self)
    }

    pub fn wreath_roles(&self) -> Option<WreathRoles> {
        self.wreath
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[GeneratorMap] {
        &self.gens
    }

    pub fn generator(&self, index: u16) -> &GeneratorMap {
        &self.gens[index as usize]
    }

    pub fn index_of(&self, id: &str) -> Result<u16> {
        self.gens
            .iter()
            .position(|g| g.id == id)
            .map(|i| i as u16)
            .ok_or_else(|| Error::UnknownGenerator(id.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.gens.iter().map(|g| g.id.as_str()).collect()
    }

    /// The symmetrized alphabet in canonical order `f, f^-1, g, g^-1, ...`.
    pub fn alphabet(&self) -> Vec<Letter> {
        (0..self.gens.len() as u16).flat_map(|g| [Letter::new(g, false), Letter::new(g, true)]).collect()
    }

    #[inline]
    pub fn apply(&self, letter: Letter, x: f64) -> Result<(f64, f64)> {
        self.gens[letter.gen() as usize].apply(letter.is_inverse(), x)
    }

    pub fn letter_bounds(&self, letter: Letter) -> Bounds {
        let b = self.gens[letter.gen() as usize].bounds;
        if letter.is_inverse() {
            b.inverse()
        } else {
            b
        }
    }

    /// `max_i der_lip` over the symmetrized alphabet.
    pub fn alphabet_lip(&self) -> f64 {
        self.alphabet().into_iter().map(|l| self.letter_bounds(l).der_lip).fold(0.0, f64::max)
    }

    /// `M` in the single-sup convention: an upper bound for
    /// `sup_x sum_i |f_i'(x)|`, taken as `sum_i der_sup_i`.
    pub fn m_single(&self) -> f64 {
        self.gens.iter().map(|g| g.bounds.der_sup).sum()
    }

    /// `M` in the doubled convention, `2 sup_x sum_i |f_i'(x)|`.
    pub fn m_double(&self) -> f64 {
        2.0 * self.m_single()
    }
}

/// The built-in ping-pong pair `pp`: splines with end slopes 1 whose middle
/// knots squeeze `[0.1, 0.9]` into `I = [0.25, 0.35]` and `J = [0.65, 0.75]`.
pub mod presets {
    use super::*;

    pub const PP_F_KNOTS: [(f64, f64); 4] = [(0.0, 0.0), (0.1, 0.251), (0.9, 0.349), (1.0, 1.0)];
    pub const PP_G_KNOTS: [(f64, f64); 4] = [(0.0, 0.0), (0.1, 0.651), (0.9, 0.749), (1.0, 1.0)];
    pub const PP_I: (f64, f64) = (0.25, 0.35);
    pub const PP_J: (f64, f64) = (0.65, 0.75);

    pub fn pp_f() -> GeneratorMap {
        GeneratorMap::spline("f", &PP_F_KNOTS, 1.0, 1.0).expect("pp.f is a valid spline")
    }

    pub fn pp_g() -> GeneratorMap {
        GeneratorMap::spline("g", &PP_G_KNOTS, 1.0, 1.0).expect("pp.g is a valid spline")
    }

    pub fn pp() -> GeneratorSet {
        GeneratorSet::new(vec![pp_f(), pp_g()]).expect("pp ids are distinct")
    }
}
