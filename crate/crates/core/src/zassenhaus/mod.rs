//! Search engines: flattening by pull-back of colliding positive words,
//! interval transport, derivative collisions, the pigeonhole bound, and the
//! `Z wr Z` bump/shift pair.

use std::time::Instant;

use crate::action::{eval_point, GridSpec};
use crate::diffeo::GeneratorSet;
use crate::words::Word;
use crate::Result;

pub mod bound;
pub mod collision;
pub mod escape;
pub mod flatten;
pub mod transport;
pub mod wreath;

pub use bound::pigeonhole_bound;
pub use collision::{derivative_collision_search, CollisionParams, CollisionReport};

pub use escape::{choose_case, find_escape_word, CaseChoice};
pub use flatten::{flatten, FlattenParams, FlattenReport};
pub use transport::{interval_transport_search, TransportParams, TransportReport};

pub use wreath::{build_wreath_pair, wreath_normal_form, wreath_sphere_sizes, WreathNormalForm, WreathPair};

/// Limits shared by the searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caps {
    pub n_max: usize,
    /// Maximum number of words (or search nodes) held at once.
    pub node_cap: usize,
    pub deadline: Option<Instant>,
}

impl Caps {
    pub fn new(n_max: usize) -> Self {
        Self { n_max, node_cap: 20_000_000, deadline: None }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Success,
    CapExhausted,
    NotFound,
    TimeBudget,
}

impl SearchStatus {
    pub fn name(self) -> &'static str {
        match self {
            SearchStatus::Success => "success",
            SearchStatus::CapExhausted => "cap_exhausted",
            SearchStatus::NotFound => "not_found",
            SearchStatus::TimeBudget => "time_budget",
        }
    }
}

/// How two distinct words were shown to be distinct group elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distinctness {
    NormalForm,
    GridSeparated,
    /// Word-distinct but not separated on the grid: possibly equal as maps.
    PossiblyEqual,
    /// Equal normal forms: the same group element.
    Equal,
}

impl Distinctness {
    pub fn name(self) -> &'static str {
        match self {
            Distinctness::NormalForm => "normal_form",
            Distinctness::GridSeparated => "grid_separated",
            Distinctness::PossiblyEqual => "possibly_equal_as_maps",
            Distinctness::Equal => "equal",
        }
    }

    pub fn is_distinct(self) -> bool {
        matches!(self, Distinctness::NormalForm | Distinctness::GridSeparated)
    }
}

pub const SEPARATION_TOL: f64 = 1e-9;
const SEPARATION_GRID: usize = 1000;

/// Decides distinctness of `w1` and `w2` as elements: through the wreath
/// normal form when the set carries wreath roles, otherwise by a grid point
/// where the maps differ by at least `SEPARATION_TOL`.
pub fn distinctness(set: &GeneratorSet, w1: &Word, w2: &Word) -> Result<Distinctness> {
    if set.wreath_roles().is_some() {
        let a = wreath_normal_form(w1, set)?;
        let b = wreath_normal_form(w2, set)?;
        return Ok(if a == b { Distinctness::Equal } else { Distinctness::NormalForm });
    }
    let grid = GridSpec::new(SEPARATION_GRID)?;
    for x in grid.points() {
        if (eval_point(w1, x, set)? - eval_point(w2, x, set)?).abs() >= SEPARATION_TOL {
            return Ok(Distinctness::GridSeparated);
        }
    }
    Ok(Distinctness::PossiblyEqual)
}
