//! Conditioning: rewrite a database so that exactly the worlds satisfying
//! a piece of Boolean evidence survive, with their probabilities
//! renormalized to sum to 1.
//!
//! The rewrite runs the decomposition recursion over the evidence ws-set
//! and, on the way back up, renormalizes each branching step by a *fresh*
//! variable whose weights are `P(x->i)·c_i / c`. Tuple descriptors are
//! threaded through the recursion: at a branch on `x` they are filtered to
//! the consistent subset and extended by `x->i`, and the eliminated
//! variable is substituted by the fresh one in the returned descriptors.
//! The confidence of the evidence falls out as a by-product.
//!
//! Two recursion drivers exist on purpose. [`cond_tree`] walks a
//! materialized evidence tree, including its independence nodes, and at
//! such a node rewrites the descriptor set once per child and unions the
//! results. That per-part rewrite keeps the other parts' variables at
//! their prior weights, so the output database is only guaranteed to
//! renormalize correctly for trees without independence nodes above the
//! branching structure: conditioning on a union of independent events
//! makes the parts correlated, which no per-part reweighting can express.
//! [`assert_evidence`], the database-level operation, therefore decomposes
//! the evidence by variable branching only; its output provably
//! represents `{(I, p/c)}`, at the cost of forgoing the independence
//! shortcut while threading descriptors.

use std::collections::{BTreeMap, HashMap, HashSet};

use smallvec::SmallVec;

use crate::budget::Budget;
use crate::decompose::{choose_variable, eliminate_variable, Heuristic, WsTree};
use crate::error::{Error, Result};
use crate::model::{Assignment, VariableId, WorldTable, WsDescriptor, WsSet};
use crate::urel::{ProbabilisticDatabase, URelation};

/// A fresh variable introduced by conditioning, with the variable it
/// renormalizes. Ids refer to the rewritten world table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreshVariable {
    pub var: VariableId,
    pub source: VariableId,
}

/// Result of conditioning a bare ws-set against an evidence tree.
#[derive(Debug, Clone)]
pub struct CondOutcome {
    /// Confidence of the evidence in the input database.
    pub confidence: f64,
    /// The input world table extended with the fresh variables.
    pub world: WorldTable,
    /// The rewritten ws-set.
    pub rewritten: WsSet,
    /// Rewrites per input descriptor, aligned with the canonical order of
    /// the input ws-set (a descriptor may split, or vanish when it is
    /// inconsistent with the evidence).
    pub per_descriptor: Vec<WsSet>,
    pub fresh: Vec<FreshVariable>,
}

/// Result of conditioning a whole database.
#[derive(Debug, Clone)]
pub struct ConditioningResult {
    pub confidence: f64,
    pub database: ProbabilisticDatabase,
    pub fresh: Vec<FreshVariable>,
}

/// A descriptor tagged with the row group it came from.
type Tagged = (u32, WsDescriptor);

struct FreshDraft {
    source: VariableId,
    /// (source value code, renormalized weight), ascending by code.
    entries: SmallVec<[(u32, f64); 4]>,
}

struct Conditioner<'a> {
    base: &'a WorldTable,
    heuristic: Heuristic,
    drafts: Vec<FreshDraft>,
    /// Keep the eliminated variable as-is when every domain value survives
    /// with one common sub-confidence: the renormalization cancels
    /// exactly, so minting a fresh variable would only copy the prior.
    /// The tree-driven path leaves this off and mints one per branching
    /// node, like the published walkthrough.
    skip_noop_renormalize: bool,
}

fn dedup_tagged(items: &mut Vec<Tagged>) {
    items.sort_unstable();
    items.dedup();
}

impl<'a> Conditioner<'a> {
    fn new(
        base: &'a WorldTable,
        heuristic: Heuristic,
        skip_noop_renormalize: bool,
    ) -> Conditioner<'a> {
        Conditioner {
            base,
            heuristic,
            drafts: Vec::new(),
            skip_noop_renormalize,
        }
    }

    /// Filter `u` to the subset consistent with `x -> code`, extending each
    /// survivor by that assignment.
    fn filter_extend(&self, u: &[Tagged], x: VariableId, code: u32) -> Vec<Tagged> {
        u.iter()
            .filter_map(|(lineage, d)| d.extended(Assignment::new(x, code)).map(|e| (*lineage, e)))
            .collect()
    }

    /// Close a branching step on `x`: record the fresh variable's weights
    /// and substitute it for `x` in every returned descriptor.
    fn renormalize(
        &mut self,
        x: VariableId,
        total: f64,
        branches: Vec<(u32, f64, Vec<Tagged>)>,
    ) -> Vec<Tagged> {
        if self.skip_noop_renormalize
            && branches.len() == self.base.domain_size(x)
            && branches.windows(2).all(|w| w[0].1 == w[1].1)
        {
            let mut out: Vec<Tagged> = branches.into_iter().flat_map(|(_, _, u_i)| u_i).collect();
            dedup_tagged(&mut out);
            return out;
        }
        let fresh = VariableId((self.base.num_vars() + self.drafts.len()) as u32);
        let mut entries: SmallVec<[(u32, f64); 4]> = SmallVec::new();
        let mut out = Vec::new();
        for (code, c_i, u_i) in branches {
            entries.push((code, self.base.prob(x, code) * c_i / total));
            for (lineage, d) in u_i {
                debug_assert_eq!(d.get(x), Some(code));
                let mut replaced = d.without(x);
                replaced = replaced
                    .extended(Assignment::new(fresh, code))
                    .expect("fresh variable cannot collide");
                out.push((lineage, replaced));
            }
        }
        self.drafts.push(FreshDraft { source: x, entries });
        dedup_tagged(&mut out);
        out
    }

    /// Fused decomposition + conditioning over an evidence ws-set, by
    /// variable branching only (see the module docs for why independent
    /// partitioning is not applied while descriptors are threaded).
    fn cond_set(
        &mut self,
        ev: WsSet,
        u: Vec<Tagged>,
        budget: &mut Budget,
    ) -> Result<(f64, Vec<Tagged>)> {
        budget.charge()?;
        if ev.is_empty() {
            return Ok((0.0, Vec::new()));
        }
        if ev.has_universal() {
            return Ok((1.0, u));
        }
        let x = choose_variable(&ev, self.base, self.heuristic);
        let (residue, buckets) = eliminate_variable(&ev, x, self.base)?;
        drop(ev);
        let mut total = 0.0;
        let mut branches = Vec::new();
        for (code, bucket) in buckets.into_iter().enumerate() {
            let code = code as u32;
            let child_ev = if bucket.is_empty() {
                if residue.is_empty() {
                    continue;
                }
                residue.clone()
            } else {
                crate::wsops::union(&bucket, &residue)
            };
            let u_i = self.filter_extend(&u, x, code);
            let (c_i, u_out) = self.cond_set(child_ev, u_i, budget)?;
            total += self.base.prob(x, code) * c_i;
            if c_i != 0.0 {
                branches.push((code, c_i, u_out));
            }
        }
        if total == 0.0 {
            return Ok((0.0, Vec::new()));
        }
        Ok((total, self.renormalize(x, total, branches)))
    }

    /// Conditioning driven by a materialized evidence tree.
    fn cond_node(
        &mut self,
        tree: &WsTree,
        u: Vec<Tagged>,
        budget: &mut Budget,
    ) -> Result<(f64, Vec<Tagged>)> {
        budget.charge()?;
        match tree {
            WsTree::Top => Ok((1.0, u)),
            WsTree::Bot => Ok((0.0, Vec::new())),
            WsTree::Times(children) => {
                let mut miss = 1.0;
                let mut out = Vec::new();
                for child in children {
                    let (c, u_i) = self.cond_node(child, u.clone(), budget)?;
                    miss *= 1.0 - c;
                    out.extend(u_i);
                }
                dedup_tagged(&mut out);
                Ok((1.0 - miss, out))
            }
            WsTree::Plus { var, branches } => {
                let x = *var;
                let mut total = 0.0;
                let mut kept = Vec::new();
                for (code, child) in branches {
                    let u_i = self.filter_extend(&u, x, *code);
                    let (c_i, u_out) = self.cond_node(child, u_i, budget)?;
                    total += self.base.prob(x, *code) * c_i;
                    if c_i != 0.0 {
                        kept.push((*code, c_i, u_out));
                    }
                }
                if total == 0.0 {
                    return Ok((0.0, Vec::new()));
                }
                Ok((total, self.renormalize(x, total, kept)))
            }
        }
    }

    /// Extend the base world table with the fresh variables. Fresh value
    /// codes are re-densified (only surviving branches keep a row), so
    /// every rewritten descriptor has its fresh codes remapped.
    fn finalize(
        self,
        outputs: Vec<Tagged>,
    ) -> Result<(WorldTable, Vec<FreshVariable>, Vec<Tagged>)> {
        let base_len = self.base.num_vars();
        let mut world = self.base.clone();
        let mut fresh = Vec::with_capacity(self.drafts.len());
        let mut counter = 1u64;
        for draft in &self.drafts {
            let source_name = world.var_name(draft.source).to_string();
            let name = loop {
                let candidate = format!("{source_name}'{counter}");
                counter += 1;
                if world.var_id(&candidate).is_err() {
                    break candidate;
                }
            };
            let domain: Vec<(String, f64)> = draft
                .entries
                .iter()
                .map(|&(code, weight)| {
                    (
                        self.base.value_label(draft.source, code).to_string(),
                        weight,
                    )
                })
                .collect();
            let domain_refs: Vec<(&str, f64)> =
                domain.iter().map(|(l, p)| (l.as_str(), *p)).collect();
            let id = world.add_variable(&name, &domain_refs)?;
            debug_assert_eq!(id.index(), base_len + fresh.len());
            fresh.push(FreshVariable {
                var: id,
                source: draft.source,
            });
        }
        let remapped = outputs
            .into_iter()
            .map(|(lineage, d)| {
                let assignments = d.iter().map(|a| {
                    if a.var.index() >= base_len {
                        let draft = &self.drafts[a.var.index() - base_len];
                        let dense = draft
                            .entries
                            .iter()
                            .position(|&(code, _)| code == a.value)
                            .expect("substituted code always survives")
                            as u32;
                        Assignment::new(a.var, dense)
                    } else {
                        *a
                    }
                });
                Ok((lineage, WsDescriptor::from_assignments(assignments)?))
            })
            .collect::<Result<Vec<Tagged>>>()?;
        Ok((world, fresh, remapped))
    }
}

/// Condition a ws-set `u` on a materialized evidence tree. Errors with
/// [`Error::UnsatisfiableEvidence`] when the tree denotes no world of
/// positive probability.
pub fn cond_tree(
    tree: &WsTree,
    u: &WsSet,
    table: &WorldTable,
    heuristic: Heuristic,
    budget: &mut Budget,
) -> Result<CondOutcome> {
    crate::decompose::validate_tree(tree, table)?;
    u.validate(table)?;
    let tagged: Vec<Tagged> = u
        .iter()
        .enumerate()
        .map(|(i, d)| (i as u32, d.clone()))
        .collect();
    let mut engine = Conditioner::new(table, heuristic, false);
    let (confidence, outputs) = engine.cond_node(tree, tagged, budget)?;
    if confidence == 0.0 {
        return Err(Error::UnsatisfiableEvidence);
    }
    let (world, fresh, outputs) = engine.finalize(outputs)?;
    let mut per_descriptor: Vec<Vec<WsDescriptor>> = vec![Vec::new(); u.len()];
    for (lineage, d) in &outputs {
        per_descriptor[*lineage as usize].push(d.clone());
    }
    Ok(CondOutcome {
        confidence,
        world,
        rewritten: WsSet::from_descriptors(outputs.into_iter().map(|(_, d)| d)),
        per_descriptor: per_descriptor
            .into_iter()
            .map(WsSet::from_descriptors)
            .collect(),
        fresh,
    })
}

/// Condition a whole database on evidence given as a ws-set. The evidence
/// is normalized and decomposed on the fly (nothing is materialized); the
/// returned database represents exactly the worlds satisfying the
/// evidence, each with probability `p/c`. The input database is untouched.
pub fn assert_evidence(
    db: &ProbabilisticDatabase,
    evidence: &WsSet,
    heuristic: Heuristic,
    budget: &mut Budget,
) -> Result<ConditioningResult> {
    evidence.validate(db.world())?;
    let evidence = evidence.normalize(db.world())?;
    if evidence.is_empty() {
        return Err(Error::UnsatisfiableEvidence);
    }

    // group rows by their descriptor so every distinct descriptor is
    // conditioned once
    let mut distinct: Vec<WsDescriptor> = Vec::new();
    let mut lineage_of: HashMap<WsDescriptor, u32> = HashMap::new();
    for (_, rel) in db.relations() {
        for row in rel.rows() {
            if !lineage_of.contains_key(&row.wsd) {
                lineage_of.insert(row.wsd.clone(), distinct.len() as u32);
                distinct.push(row.wsd.clone());
            }
        }
    }
    let tagged: Vec<Tagged> = distinct
        .iter()
        .enumerate()
        .map(|(i, d)| (i as u32, d.clone()))
        .collect();

    let mut engine = Conditioner::new(db.world(), heuristic, true);
    let (confidence, outputs) = engine.cond_set(evidence, tagged, budget)?;
    if confidence == 0.0 {
        return Err(Error::UnsatisfiableEvidence);
    }
    let (world, fresh, outputs) = engine.finalize(outputs)?;

    let mut rewrites: Vec<Vec<WsDescriptor>> = vec![Vec::new(); distinct.len()];
    for (lineage, d) in outputs {
        rewrites[lineage as usize].push(d);
    }

    let mut relations = BTreeMap::new();
    for (name, rel) in db.relations() {
        let mut rewritten = URelation::new(rel.columns().to_vec())?;
        for row in rel.rows() {
            let lineage = lineage_of[&row.wsd] as usize;
            for d in &rewrites[lineage] {
                rewritten.push(d.clone(), row.values.clone())?;
            }
        }
        relations.insert(name.to_string(), rewritten);
    }
    let database = ProbabilisticDatabase::with_rewritten(world, relations)?;
    Ok(ConditioningResult {
        confidence,
        database,
        fresh,
    })
}

// ---------------------------------------------------------------------------
// world-table simplification

/// Source of a fresh-variable name `x'3` is `x'` -> `x`; plain names have
/// no source.
fn fresh_source(name: &str) -> Option<&str> {
    let cut = name.rfind('\'')?;
    Some(&name[..cut])
}

/// Simplify a database to a fixpoint of three world-semantics-preserving
/// rules: (1) drop variables that no relation mentions, (2) drop
/// singleton-domain variables everywhere, (3) merge fresh variables that
/// renormalize the same source variable with identical domains and
/// weights.
pub fn simplify(db: &ProbabilisticDatabase) -> Result<ProbabilisticDatabase> {
    let mut current = db.clone();
    loop {
        let mut changed = false;

        // rules 1 + 2: drop unused and singleton-domain variables
        let world = current.world();
        let mut used: HashSet<VariableId> = HashSet::new();
        for (_, rel) in current.relations() {
            for row in rel.rows() {
                used.extend(row.wsd.iter().map(|a| a.var));
            }
        }
        let keep: Vec<VariableId> = world
            .var_ids()
            .filter(|v| used.contains(v) && world.domain_size(*v) > 1)
            .collect();
        if keep.len() != world.num_vars() {
            changed = true;
            let mut new_world = WorldTable::new();
            let mut id_map: HashMap<VariableId, VariableId> = HashMap::new();
            for &v in &keep {
                let domain: Vec<(&str, f64)> = world
                    .value_labels(v)
                    .iter()
                    .map(String::as_str)
                    .zip(world.probs(v).iter().copied())
                    .collect();
                let new_id = new_world.add_variable(world.var_name(v), &domain)?;
                id_map.insert(v, new_id);
            }
            let mut relations = BTreeMap::new();
            for (name, rel) in current.relations() {
                let mut rewritten = URelation::new(rel.columns().to_vec())?;
                for row in rel.rows() {
                    let assignments = row
                        .wsd
                        .iter()
                        .filter_map(|a| id_map.get(&a.var).map(|&v| Assignment::new(v, a.value)));
                    let d = WsDescriptor::from_assignments(assignments)?;
                    rewritten.push(d, row.values.clone())?;
                }
                relations.insert(name.to_string(), rewritten);
            }
            current = ProbabilisticDatabase::with_rewritten(new_world, relations)?;
        }

        // rule 3: merge equal-profile fresh variables of one source
        let world = current.world();
        let mut groups: HashMap<(String, Vec<String>, Vec<u64>), Vec<VariableId>> = HashMap::new();
        for v in world.var_ids() {
            let Some(source) = fresh_source(world.var_name(v)) else {
                continue;
            };
            let labels = world.value_labels(v).to_vec();
            let bits: Vec<u64> = world.probs(v).iter().map(|p| p.to_bits()).collect();
            groups
                .entry((source.to_string(), labels, bits))
                .or_default()
                .push(v);
        }
        // Two fresh variables of one source may merge only if they are
        // read in mutually exclusive contexts: for every pair of rows
        // mentioning one variable each, the descriptors minus those
        // assignments must be mutex. (Conditioning introduces the fresh
        // variables in distinct branches, whose branch assignments are
        // baked into the descriptors, so this holds for its output.)
        let contexts_mutex = |a: VariableId, b: VariableId| {
            let rows_a: Vec<WsDescriptor> = current
                .relations()
                .flat_map(|(_, rel)| rel.rows().iter())
                .filter(|row| row.wsd.mentions(a))
                .map(|row| row.wsd.without(a))
                .collect();
            let rows_b: Vec<WsDescriptor> = current
                .relations()
                .flat_map(|(_, rel)| rel.rows().iter())
                .filter(|row| row.wsd.mentions(b))
                .map(|row| row.wsd.without(b))
                .collect();
            rows_a
                .iter()
                .all(|ca| rows_b.iter().all(|cb| ca.is_mutex(cb)))
        };
        let mut substitution: HashMap<VariableId, VariableId> = HashMap::new();
        for (_, mut vars) in groups {
            if vars.len() < 2 {
                continue;
            }
            vars.sort();
            let all_mutex = (0..vars.len())
                .all(|i| (i + 1..vars.len()).all(|j| contexts_mutex(vars[i], vars[j])));
            if !all_mutex {
                continue;
            }
            let target = vars[0];
            for &v in &vars[1..] {
                substitution.insert(v, target);
            }
        }
        if !substitution.is_empty() {
            changed = true;
            let mut relations = BTreeMap::new();
            for (name, rel) in current.relations() {
                let mut rewritten = URelation::new(rel.columns().to_vec())?;
                for row in rel.rows() {
                    let assignments = row.wsd.iter().map(|a| match substitution.get(&a.var) {
                        Some(&target) => Assignment::new(target, a.value),
                        None => *a,
                    });
                    let d = WsDescriptor::from_assignments(assignments)?;
                    rewritten.push(d, row.values.clone())?;
                }
                relations.insert(name.to_string(), rewritten);
            }
            // merged variables become unused; the next round drops them
            current = ProbabilisticDatabase::with_rewritten(world.clone(), relations)?;
        }

        if !changed {
            return Ok(current);
        }
    }
}
