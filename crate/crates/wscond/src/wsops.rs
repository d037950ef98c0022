//! Set operations on ws-sets: intersection, union and the inductive
//! difference whose output descriptors are pairwise mutually exclusive.

use crate::budget::Caps;
use crate::error::{Error, Result};
use crate::model::{Assignment, WorldTable, WsDescriptor, WsSet};

/// Intersection: all consistent pairwise unions. The result denotes the
/// intersection of the two world-sets.
pub fn intersect(s1: &WsSet, s2: &WsSet) -> WsSet {
    let mut out = Vec::new();
    for d1 in s1 {
        for d2 in s2 {
            if let Some(merged) = d1.merge(d2) {
                out.push(merged);
            }
        }
    }
    WsSet::from_descriptors(out)
}

/// Union is plain set union of the descriptors.
pub fn union(s1: &WsSet, s2: &WsSet) -> WsSet {
    WsSet::from_descriptors(s1.iter().chain(s2.iter()).cloned())
}

/// Difference of two singleton ws-sets.
///
/// If the descriptors are inconsistent the result is `{d1}`. Otherwise,
/// with `d2 - d1 = {x1->w1, ..., xk->wk}` taken in ascending variable
/// order, the result contains `d1 ∪ {x1->w1, ..., x(i-1)->w(i-1), xi->w'}`
/// for every `i` and every domain value `w' != wi`. The output descriptors
/// are pairwise mutex; the empty set comes back when `d1` extends `d2`.
pub fn diff_singleton(d1: &WsDescriptor, d2: &WsDescriptor, table: &WorldTable) -> Result<WsSet> {
    d1.validate(table)?;
    d2.validate(table)?;
    if !d1.consistent(d2) {
        return Ok(WsSet::from_descriptors([d1.clone()]));
    }
    let missing = d1.missing_from(d2);
    let mut out = Vec::new();
    let mut prefix = d1.clone();
    for a in missing {
        for code in 0..table.domain_size(a.var) as u32 {
            if code != a.value {
                // prefix never mentions a.var, so the extension is consistent
                out.push(prefix.extended(Assignment::new(a.var, code)).unwrap());
            }
        }
        prefix = prefix.extended(a).unwrap();
    }
    Ok(WsSet::from_descriptors(out))
}

/// Fold one descriptor against a subtrahend slice, materializing
/// `{d} - subtrahend`. Shared by [`diff`] and the rewrites built on it.
pub(crate) fn diff_one(
    d: &WsDescriptor,
    subtrahend: &[WsDescriptor],
    table: &WorldTable,
    caps: &Caps,
) -> Result<Vec<WsDescriptor>> {
    let mut working = vec![d.clone()];
    for d2 in subtrahend {
        let mut next = Vec::new();
        for e in &working {
            next.extend(diff_singleton(e, d2, table)?.iter().cloned());
            if next.len() as u64 > caps.diff_working_set {
                return Err(Error::ResourceExhausted {
                    what: "difference working set",
                    cap: caps.diff_working_set,
                });
            }
        }
        next.sort_unstable();
        next.dedup();
        working = next;
        if working.is_empty() {
            break;
        }
    }
    Ok(working)
}

/// Difference `S1 - S2` as a ws-set whose descriptors are pairwise mutex.
///
/// Each minuend descriptor is folded against the subtrahend in ascending
/// canonical order. Minuend descriptors already processed join the
/// subtrahend for the ones that follow; that keeps the mutex guarantee
/// even when `S1` contains overlapping descriptors, at no cost to the
/// denoted world-set.
pub fn diff(s1: &WsSet, s2: &WsSet, table: &WorldTable, caps: &Caps) -> Result<WsSet> {
    let mut subtrahend: Vec<WsDescriptor> = s2.iter().cloned().collect();
    let mut result: Vec<WsDescriptor> = Vec::new();
    for d in s1 {
        result.extend(diff_one(d, &subtrahend, table, caps)?);
        subtrahend.push(d.clone());
    }
    Ok(WsSet::from_descriptors(result))
}

/// Streaming difference `{d} - S`: yields the descriptors of
/// [`diff`]`({d}, S)` one at a time without materializing the result, in
/// depth-first order of the inductive construction. Mutex and
/// distinctness of the yields follow from the construction, so callers
/// can fold probabilities on the fly.
pub fn diff_stream<'a>(
    d: &WsDescriptor,
    s: &'a WsSet,
    table: &'a WorldTable,
) -> Result<DiffStream<'a>> {
    d.validate(table)?;
    s.validate(table)?;
    Ok(diff_stream_over(d, s.descriptors(), table))
}

/// Non-validating stream over a subtrahend slice (callers guarantee
/// validity; ws-descriptor elimination walks suffixes of one ws-set).
pub(crate) fn diff_stream_over<'a>(
    d: &WsDescriptor,
    subtrahend: &'a [WsDescriptor],
    table: &'a WorldTable,
) -> DiffStream<'a> {
    DiffStream {
        stack: vec![(d.clone(), 0)],
        subtrahend,
        table,
    }
}

pub struct DiffStream<'a> {
    /// Pending (descriptor, index of the next subtrahend descriptor).
    stack: Vec<(WsDescriptor, usize)>,
    subtrahend: &'a [WsDescriptor],
    table: &'a WorldTable,
}

impl Iterator for DiffStream<'_> {
    type Item = WsDescriptor;

    fn next(&mut self) -> Option<WsDescriptor> {
        while let Some((desc, k)) = self.stack.pop() {
            if k == self.subtrahend.len() {
                return Some(desc);
            }
            // validated inputs: diff_singleton cannot fail here
            let pieces = diff_singleton(&desc, &self.subtrahend[k], self.table).unwrap();
            for piece in pieces.iter().rev() {
                self.stack.push((piece.clone(), k + 1));
            }
        }
        None
    }
}
