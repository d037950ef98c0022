//! An in-memory probabilistic database engine over U-relations.
//!
//! Uncertainty is represented by a world table of independent finite
//! random variables; tuples carry world-set descriptors (partial variable
//! assignments) that say in which worlds they exist. On top of that the
//! crate provides:
//!
//! - positive relational algebra with descriptor-aware joins ([`urel`],
//!   [`query`]),
//! - exact confidence computation by recursive decomposition into
//!   independent partitions and variable eliminations ([`decompose`]),
//! - an alternative exact engine based on descriptor elimination
//!   ([`wselim`]) and a Karp-Luby style Monte Carlo baseline ([`approx`]),
//! - conditioning: rewriting a database so that exactly the worlds
//!   satisfying a piece of evidence survive, with renormalized weights
//!   ([`condition`]),
//! - a deterministic instance generator and benchmark harness
//!   ([`generator`], [`mod@bench`]).

pub mod approx;
pub mod bench;
pub mod budget;
pub mod condition;
pub mod decompose;
pub mod enumerate;
pub mod error;
pub mod generator;
pub mod model;
mod numeric;
pub mod query;
pub mod urel;
pub mod wselim;
pub mod wsops;

#[cfg(test)]
pub(crate) mod testutil;

pub use budget::{Budget, Caps};
pub use error::{Error, Result};
pub use model::{Assignment, VariableId, WorldTable, WsDescriptor, WsSet};
pub use urel::{ProbabilisticDatabase, URelation, Value};
