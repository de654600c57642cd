//! Numerical laboratory for finitely generated subgroups of the group of
//! orientation-preserving diffeomorphisms of `[0, 1]`.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffeo`]: generator families with exact values, derivatives, inverses
//!   and certified global derivative bounds.
//! - [`words`]: freely reduced words, sphere/ball/positive-word enumeration.
//! - [`action`]: orbit traces with chain-rule products, certified `C0`/`C1`
//!   distances to the identity and discreteness probes.
//! - [`certify`]: ping-pong certificates for free subsemigroups and
//!   endpoint-slope checks.
//! - [`zassenhaus`]: the search engines (flattening, interval transport,
//!   derivative collisions, pigeonhole bound) and the `Z wr Z` construction.
//! - [`config`]: key=value configuration sections.
//!
//! Heavy loops go through [`par`], which is backed by rayon when the
//! `parallel` feature is enabled and by plain iterators otherwise. Results are
//! identical either way.

// Negated float comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod certify;
pub mod config;
pub mod diffeo;
mod error;
pub mod numeric;
pub mod par;
pub mod words;
pub mod zassenhaus;

pub use error::{Error, Result};
