//! Exact probability by ws-descriptor elimination: peel off one descriptor
//! at a time, stream the mutex difference of it against the rest, and sum
//! descriptor probabilities. An alternative exact engine to the tree
//! decomposition.

use crate::budget::{Budget, Caps};
use crate::error::{Error, Result};
use crate::model::{WorldTable, WsDescriptor, WsSet};
use crate::numeric::CompensatedSum;
use crate::wsops;

/// Probability of `ω(S)` by descriptor elimination:
/// `P(S) = P(S \ {d}) + Σ P(e)` over the difference `{d} - (S \ {d})`,
/// whose members are pairwise mutex. Descriptors are eliminated in
/// canonical order; each difference is streamed and discarded one
/// descriptor at a time (every streamed descriptor charges the budget).
pub fn probability_by_elimination(
    s: &WsSet,
    table: &WorldTable,
    budget: &mut Budget,
) -> Result<f64> {
    s.validate(table)?;
    let descriptors = s.descriptors();
    let mut acc = CompensatedSum::new();
    for (i, d) in descriptors.iter().enumerate() {
        let rest = &descriptors[i + 1..];
        for piece in wsops::diff_stream_over(d, rest, table) {
            budget.charge()?;
            acc.add(piece.probability_unchecked(table));
        }
    }
    Ok(acc.total())
}

/// The equivalent mutex ws-set: union over `i` of `{d_i} - {d_{i+1}, ...}`
/// (the last descriptor joins unchanged). The output denotes the same
/// world-set and its members are pairwise mutually exclusive, so its
/// probability is the plain sum of descriptor probabilities.
pub fn mutex_rewrite(s: &WsSet, table: &WorldTable, caps: &Caps) -> Result<WsSet> {
    s.validate(table)?;
    let descriptors = s.descriptors();
    let mut out: Vec<WsDescriptor> = Vec::new();
    for (i, d) in descriptors.iter().enumerate() {
        let rest = &descriptors[i + 1..];
        out.extend(wsops::diff_one(d, rest, table, caps)?);
        if out.len() as u64 > caps.diff_working_set {
            return Err(Error::ResourceExhausted {
                what: "mutex rewrite output",
                cap: caps.diff_working_set,
            });
        }
    }
    Ok(WsSet::from_descriptors(out))
}
