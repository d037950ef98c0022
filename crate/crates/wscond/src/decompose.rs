//! Recursive decomposition of ws-sets into ws-trees and exact probability
//! computation.
//!
//! A ws-tree makes the structure of a ws-set explicit: `⊗` nodes combine
//! independent (variable-disjoint) subtrees, `⊕` nodes branch on the
//! distinct values of one variable. Once a ws-set is in tree form, its
//! probability falls out of one bottom-up traversal. The translation
//! recursion prefers splitting into independent partitions (connected
//! components of the variable co-occurrence graph) and otherwise
//! eliminates one variable, chosen by a branching heuristic.
//! [`confidence`] fuses translation and probability so that nothing is
//! materialized.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};

use smallvec::SmallVec;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::model::{VariableId, WorldTable, WsDescriptor, WsSet};

/// Multiplicative hasher for variable-id keys; the default hasher is a
/// measurable cost in the per-node statistics passes.
#[derive(Default)]
struct VarIdHasher(u64);

impl Hasher for VarIdHasher {
    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x9e3779b97f4a7c15);
        }
    }
    #[inline]
    fn write_u32(&mut self, v: u32) {
        self.0 = (v as u64).wrapping_mul(0x9e3779b97f4a7c15);
    }
    #[inline]
    fn finish(&self) -> u64 {
        self.0 ^ (self.0 >> 32)
    }
}

type VarIdMap<V> = HashMap<VariableId, V, BuildHasherDefault<VarIdHasher>>;

/// Variable-choice heuristic for the elimination step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// Minimize `log2` of the summed per-branch translation costs.
    MinLog,
    /// Minimize the size of the largest per-branch subproblem.
    MinMax,
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Heuristic::MinLog => write!(f, "minlog"),
            Heuristic::MinMax => write!(f, "minmax"),
        }
    }
}

impl std::str::FromStr for Heuristic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Heuristic> {
        match s {
            "minlog" => Ok(Heuristic::MinLog),
            "minmax" => Ok(Heuristic::MinMax),
            other => Err(Error::Invalid(format!("unknown heuristic {other:?}"))),
        }
    }
}

/// Decomposition tree. `Top` is the leaf for the universal descriptor
/// (all worlds), `Bot` the empty world-set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WsTree {
    Times(Vec<WsTree>),
    Plus {
        var: VariableId,
        branches: Vec<(u32, WsTree)>,
    },
    Top,
    Bot,
}

// ---------------------------------------------------------------------------
// independent partitioning

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb as usize] = ra;
        }
    }
}

/// Split a ws-set into the finest partition of pairwise-independent
/// nonempty subsets: the connected components of the graph of variables
/// co-occurring within descriptors. Parts come back in canonical order of
/// their first descriptor. A universal descriptor, should one appear,
/// forms its own part.
pub fn independent_partition(s: &WsSet) -> Vec<WsSet> {
    // map the (possibly sparse) variable ids occurring in s to dense slots
    let mut slot: VarIdMap<u32> = VarIdMap::default();
    for d in s {
        for a in d.iter() {
            let next = slot.len() as u32;
            slot.entry(a.var).or_insert(next);
        }
    }
    let mut uf = UnionFind::new(slot.len());
    for d in s {
        let mut prev: Option<u32> = None;
        for a in d.iter() {
            let cur = slot[&a.var];
            if let Some(p) = prev {
                uf.union(p, cur);
            }
            prev = Some(cur);
        }
    }
    let mut groups: Vec<(u32, Vec<WsDescriptor>)> = Vec::new();
    let mut by_root: HashMap<u32, usize> = HashMap::new();
    let mut universal_group: Option<usize> = None;
    for d in s {
        let group = match d.iter().next() {
            Some(a) => {
                let root = uf.find(slot[&a.var]);
                *by_root.entry(root).or_insert_with(|| {
                    groups.push((root, Vec::new()));
                    groups.len() - 1
                })
            }
            None => *universal_group.get_or_insert_with(|| {
                groups.push((u32::MAX, Vec::new()));
                groups.len() - 1
            }),
        };
        groups[group].1.push(d.clone());
    }
    groups
        .into_iter()
        .map(|(_, ds)| WsSet::from_sorted_unchecked(ds))
        .collect()
}

// ---------------------------------------------------------------------------
// variable elimination

/// Split `s` on variable `x`: the residue `T` of descriptors not
/// mentioning `x`, and for every domain value `i` of `x` the set of
/// descriptors containing `x -> i` with that assignment stripped (indexed
/// by value code).
pub fn eliminate_variable(
    s: &WsSet,
    x: VariableId,
    table: &WorldTable,
) -> Result<(WsSet, Vec<WsSet>)> {
    if x.index() >= table.num_vars() {
        return Err(Error::UnknownVariableId { id: x.0 });
    }
    let dom = table.domain_size(x);
    let mut residue: Vec<WsDescriptor> = Vec::new();
    let mut buckets: Vec<Vec<WsDescriptor>> = vec![Vec::new(); dom];
    let mut occurs = false;
    for d in s {
        match d.get(x) {
            Some(code) => {
                occurs = true;
                buckets[code as usize].push(d.without(x));
            }
            None => residue.push(d.clone()),
        }
    }
    if !occurs {
        return Err(Error::VariableNotInSet {
            name: table.var_name(x).to_string(),
        });
    }
    let buckets = buckets.into_iter().map(WsSet::from_descriptors).collect();
    Ok((WsSet::from_sorted_unchecked(residue), buckets))
}

/// `log2(2^a + 2^b)` without overflow.
fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// Per-assignment statistics of one variable within a ws-set.
#[derive(Clone, Copy)]
struct CodeStat {
    code: u32,
    /// Descriptors carrying this assignment.
    count: usize,
    /// Strips that duplicate a residue member (exact estimates only).
    dup: usize,
    /// Some carrier is the singleton `{x->i}`: the branch subproblem
    /// contains the universal descriptor and is trivially done.
    singleton: bool,
}

struct VarInfo {
    present: usize,
    codes: SmallVec<[CodeStat; 4]>,
}

impl VarInfo {
    fn stat_mut(&mut self, code: u32) -> &mut CodeStat {
        if let Some(i) = self.codes.iter().position(|s| s.code == code) {
            return &mut self.codes[i];
        }
        self.codes.push(CodeStat {
            code,
            count: 0,
            dup: 0,
            singleton: false,
        });
        self.codes.last_mut().unwrap()
    }
}

/// Exact per-variable statistics, including the overlap of stripped
/// descriptors with the residue (set-union semantics of the estimates).
fn analyze(s: &WsSet) -> BTreeMap<VariableId, VarInfo> {
    let members: HashSet<&WsDescriptor> = s.iter().collect();
    let mut info: BTreeMap<VariableId, VarInfo> = BTreeMap::new();
    for d in s {
        for a in d.iter() {
            let entry = info.entry(a.var).or_insert_with(|| VarInfo {
                present: 0,
                codes: SmallVec::new(),
            });
            entry.present += 1;
            let stripped = d.without(a.var);
            // the stripped descriptor never mentions a.var, so a hit is a
            // member of the residue T for a.var
            let dup = usize::from(members.contains(&stripped));
            let stat = entry.stat_mut(a.value);
            stat.count += 1;
            stat.dup += dup;
            stat.singleton |= d.len() == 1;
        }
    }
    info
}

/// Branch sizes `|S_{x->i} ∪ T|` folded per the incremental log-cost
/// recurrence; `clamp_done` treats branches holding the universal
/// descriptor as cost-free (used when choosing, not by the estimate
/// operations).
fn minlog_of(info: &VarInfo, total: usize, dom: usize, clamp_done: bool) -> f64 {
    let residue = total - info.present;
    let missing = info.codes.len() < dom;
    let mut e = if missing { residue as f64 } else { 0.0 };
    // ascending code order for a deterministic fold
    let mut codes = info.codes.clone();
    codes.sort_unstable_by_key(|s| s.code);
    for stat in &codes {
        let branch = if clamp_done && stat.singleton {
            0
        } else {
            stat.count + residue - stat.dup
        };
        e = log2_add(e, branch as f64);
    }
    e
}

fn minmax_of(info: &VarInfo, total: usize, clamp_done: bool) -> usize {
    let residue = total - info.present;
    info.codes
        .iter()
        .map(|stat| {
            if clamp_done && stat.singleton {
                0
            } else {
                stat.count + residue - stat.dup
            }
        })
        .max()
        .unwrap_or(0)
}

/// Log-scale cost estimate of eliminating `x`: `log2` of the summed
/// per-branch translation costs `2^|S_{x->i} ∪ T|`, where a residue that
/// only shows up under domain values absent from `s` is charged once.
pub fn estimate_minlog(s: &WsSet, x: VariableId, table: &WorldTable) -> Result<f64> {
    let info = analyze(s);
    let info = info.get(&x).ok_or_else(|| Error::VariableNotInSet {
        name: table.var_name(x).to_string(),
    })?;
    Ok(minlog_of(info, s.len(), table.domain_size(x), false))
}

/// Size of the largest per-branch subproblem `|T ∪ S_{x->i}|` over the
/// values of `x` occurring in `s`.
pub fn estimate_minmax(s: &WsSet, x: VariableId, table: &WorldTable) -> Result<usize> {
    let info = analyze(s);
    let info = info.get(&x).ok_or_else(|| Error::VariableNotInSet {
        name: table.var_name(x).to_string(),
    })?;
    Ok(minmax_of(info, s.len(), false))
}

/// Per-variable assignment counts in one linear pass (no residue-overlap
/// correction; see [`choose_variable`]).
fn analyze_counts<'a, I>(descriptors: I) -> Vec<(VariableId, VarInfo)>
where
    I: Iterator<Item = &'a WsDescriptor>,
{
    let mut info: VarIdMap<VarInfo> = VarIdMap::default();
    for d in descriptors {
        for a in d.iter() {
            let entry = info.entry(a.var).or_insert_with(|| VarInfo {
                present: 0,
                codes: SmallVec::new(),
            });
            entry.present += 1;
            let stat = entry.stat_mut(a.value);
            stat.count += 1;
            stat.singleton |= d.len() == 1;
        }
    }
    let mut out: Vec<(VariableId, VarInfo)> = info.into_iter().collect();
    out.sort_unstable_by_key(|(var, _)| *var);
    out
}

/// Variable choice over any descriptor sequence.
///
/// The choice pass differs from the estimate operations in two ways that
/// matter in the many-descriptors regime: branch sizes are the plain
/// counts `|S_{x->i}| + |T|` (one pass over the set, no overlap
/// correction), and a branch that strips a singleton descriptor counts as
/// free, since its subproblem holds the universal descriptor and
/// terminates immediately. Without the latter the recursion keeps
/// preferring marginally denser variables and misses the cheap exits that
/// make dense ws-sets tractable.
fn choose_from<'a, I>(
    descriptors: I,
    total: usize,
    table: &WorldTable,
    heuristic: Heuristic,
) -> VariableId
where
    I: Iterator<Item = &'a WsDescriptor>,
{
    let info = analyze_counts(descriptors);
    debug_assert!(!info.is_empty());
    let mut best: Option<(f64, VariableId)> = None;
    for (var, vi) in &info {
        let score = match heuristic {
            Heuristic::MinLog => minlog_of(vi, total, table.domain_size(*var), true),
            Heuristic::MinMax => minmax_of(vi, total, true) as f64,
        };
        if best.is_none_or(|(b, _)| score < b) {
            best = Some((score, *var));
        }
    }
    best.unwrap().1
}

/// The heuristic-minimizing variable of a ws-set; ties break towards the
/// lowest variable id.
pub(crate) fn choose_variable(s: &WsSet, table: &WorldTable, heuristic: Heuristic) -> VariableId {
    choose_from(s.iter(), s.len(), table, heuristic)
}

fn merge_sets(a: &WsSet, b: &WsSet) -> WsSet {
    if b.is_empty() {
        return a.clone();
    }
    if a.is_empty() {
        return b.clone();
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let (da, db) = (a.descriptors(), b.descriptors());
    while i < da.len() && j < db.len() {
        match da[i].cmp(&db[j]) {
            std::cmp::Ordering::Less => {
                out.push(da[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(db[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(da[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&da[i..]);
    out.extend_from_slice(&db[j..]);
    WsSet::from_sorted_unchecked(out)
}

// ---------------------------------------------------------------------------
// translation

/// Translate a ws-set into an equivalent ws-tree. Independent partitioning
/// is applied whenever it is non-trivial; otherwise the heuristic picks the
/// variable to eliminate. Branches whose subproblem is empty are omitted
/// (they denote no worlds); when some domain value is absent from the set,
/// the residue is translated once and shared across those branches.
pub fn compute_tree(
    s: &WsSet,
    table: &WorldTable,
    heuristic: Heuristic,
    budget: &mut Budget,
) -> Result<WsTree> {
    build_tree(s.clone(), table, heuristic, budget)
}

fn build_tree(
    s: WsSet,
    table: &WorldTable,
    heuristic: Heuristic,
    budget: &mut Budget,
) -> Result<WsTree> {
    budget.charge()?;
    if s.is_empty() {
        return Ok(WsTree::Bot);
    }
    if s.has_universal() {
        return Ok(WsTree::Top);
    }
    let parts = independent_partition(&s);
    if parts.len() > 1 {
        let children: Result<Vec<WsTree>> = parts
            .into_iter()
            .map(|p| build_tree(p, table, heuristic, budget))
            .collect();
        return Ok(WsTree::Times(children?));
    }
    let x = choose_variable(&s, table, heuristic);
    let (residue, buckets) = eliminate_variable(&s, x, table)?;
    drop(s);
    let mut shared_residue: Option<WsTree> = None;
    let mut branches = Vec::new();
    for (code, bucket) in buckets.into_iter().enumerate() {
        let code = code as u32;
        if bucket.is_empty() {
            if residue.is_empty() {
                continue; // no worlds down this branch
            }
            if shared_residue.is_none() {
                shared_residue = Some(build_tree(residue.clone(), table, heuristic, budget)?);
            }
            branches.push((code, shared_residue.clone().unwrap()));
        } else {
            let child = merge_sets(&bucket, &residue);
            branches.push((code, build_tree(child, table, heuristic, budget)?));
        }
    }
    Ok(WsTree::Plus { var: x, branches })
}

// ---------------------------------------------------------------------------
// probability

/// Exact probability of the world-set a tree denotes, in one bottom-up
/// traversal.
pub fn tree_probability(tree: &WsTree, table: &WorldTable) -> f64 {
    match tree {
        WsTree::Top => 1.0,
        WsTree::Bot => 0.0,
        WsTree::Times(children) => {
            let miss: f64 = children
                .iter()
                .map(|c| 1.0 - tree_probability(c, table))
                .product();
            1.0 - miss
        }
        WsTree::Plus { var, branches } => branches
            .iter()
            .map(|(code, child)| table.prob(*var, *code) * tree_probability(child, table))
            .sum(),
    }
}

/// Shared descriptors for the fused recursion: subproblems overlap
/// heavily (the residue is passed to every branch), so the working sets
/// hold reference-counted descriptors and cloning a set is a row of
/// refcount bumps.
type DescRef = std::rc::Rc<WsDescriptor>;

fn merge_refs(a: &[DescRef], b: &[DescRef]) -> Vec<DescRef> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].as_ref().cmp(b[j].as_ref()) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Connected components of the variable co-occurrence graph, as index
/// groups in first-descriptor order.
fn partition_refs(s: &[DescRef]) -> Vec<Vec<DescRef>> {
    let mut slot: VarIdMap<u32> = VarIdMap::default();
    for d in s {
        for a in d.iter() {
            let next = slot.len() as u32;
            slot.entry(a.var).or_insert(next);
        }
    }
    let mut uf = UnionFind::new(slot.len());
    for d in s {
        let mut prev: Option<u32> = None;
        for a in d.iter() {
            let cur = slot[&a.var];
            if let Some(p) = prev {
                uf.union(p, cur);
            }
            prev = Some(cur);
        }
    }
    let mut groups: Vec<Vec<DescRef>> = Vec::new();
    let mut by_root: HashMap<u32, usize> = HashMap::new();
    for d in s {
        let root = uf.find(slot[&d.iter().next().expect("no universal descriptor here").var]);
        let group = *by_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[group].push(d.clone());
    }
    groups
}

/// Probability of a ws-set without materializing the tree.
/// `use_partitioning = false` gives the variable-elimination-only variant.
pub fn confidence(
    s: &WsSet,
    table: &WorldTable,
    heuristic: Heuristic,
    use_partitioning: bool,
    budget: &mut Budget,
) -> Result<f64> {
    s.validate(table)?;
    let refs: Vec<DescRef> = s.iter().map(|d| DescRef::new(d.clone())).collect();
    conf_rec(refs, table, heuristic, use_partitioning, budget)
}

fn conf_rec(
    s: Vec<DescRef>,
    table: &WorldTable,
    heuristic: Heuristic,
    part: bool,
    budget: &mut Budget,
) -> Result<f64> {
    budget.charge()?;
    let Some(first) = s.first() else {
        return Ok(0.0);
    };
    if first.is_empty() {
        return Ok(1.0); // sorted sets put the universal descriptor first
    }
    if part {
        let parts = partition_refs(&s);
        if parts.len() > 1 {
            drop(s);
            let mut miss = 1.0;
            for p in parts {
                miss *= 1.0 - conf_rec(p, table, heuristic, part, budget)?;
            }
            return Ok(1.0 - miss);
        }
    }
    let x = choose_from(s.iter().map(|d| d.as_ref()), s.len(), table, heuristic);
    let dom = table.domain_size(x);
    let mut residue: Vec<DescRef> = Vec::new();
    let mut buckets: Vec<Vec<DescRef>> = vec![Vec::new(); dom];
    for d in &s {
        match d.get(x) {
            Some(code) => buckets[code as usize].push(DescRef::new(d.without(x))),
            None => residue.push(d.clone()),
        }
    }
    drop(s);
    for bucket in &mut buckets {
        bucket.sort_unstable_by(|a, b| a.as_ref().cmp(b.as_ref()));
        bucket.dedup_by(|a, b| a.as_ref() == b.as_ref());
    }
    let mut residue_conf: Option<f64> = None;
    let mut total = 0.0;
    for (code, bucket) in buckets.into_iter().enumerate() {
        let p = table.prob(x, code as u32);
        let c = if bucket.is_empty() {
            if residue.is_empty() {
                continue;
            }
            match residue_conf {
                Some(c) => c,
                None => {
                    let c = conf_rec(residue.clone(), table, heuristic, part, budget)?;
                    residue_conf = Some(c);
                    c
                }
            }
        } else {
            conf_rec(
                merge_refs(&bucket, &residue),
                table,
                heuristic,
                part,
                budget,
            )?
        };
        total += p * c;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// tree utilities

/// Check the structural invariants: each variable at most once per
/// root-to-leaf path, branch values distinct and within the variable's
/// domain, and variable-disjoint `⊗` children.
pub fn validate_tree(tree: &WsTree, table: &WorldTable) -> Result<()> {
    fn walk(
        tree: &WsTree,
        table: &WorldTable,
        path: &mut HashSet<VariableId>,
    ) -> Result<HashSet<VariableId>> {
        match tree {
            WsTree::Top | WsTree::Bot => Ok(HashSet::new()),
            WsTree::Times(children) => {
                let mut seen: HashSet<VariableId> = HashSet::new();
                for child in children {
                    let vars = walk(child, table, path)?;
                    for v in vars {
                        if !seen.insert(v) {
                            return Err(Error::InvalidTree(format!(
                                "⊗ children share variable {}",
                                table.var_name(v)
                            )));
                        }
                    }
                }
                Ok(seen)
            }
            WsTree::Plus { var, branches } => {
                if var.index() >= table.num_vars() {
                    return Err(Error::UnknownVariableId { id: var.0 });
                }
                if path.contains(var) {
                    return Err(Error::InvalidTree(format!(
                        "variable {} repeats along a path",
                        table.var_name(*var)
                    )));
                }
                let dom = table.domain_size(*var) as u32;
                let mut codes = HashSet::new();
                path.insert(*var);
                let mut vars = HashSet::new();
                for (code, child) in branches {
                    if *code >= dom {
                        return Err(Error::InvalidTree(format!(
                            "branch value #{code} outside the domain of {}",
                            table.var_name(*var)
                        )));
                    }
                    if !codes.insert(*code) {
                        return Err(Error::InvalidTree(format!(
                            "duplicate branch value #{code} on {}",
                            table.var_name(*var)
                        )));
                    }
                    vars.extend(walk(child, table, path)?);
                }
                path.remove(var);
                vars.insert(*var);
                Ok(vars)
            }
        }
    }
    walk(tree, table, &mut HashSet::new()).map(|_| ())
}

/// The ws-set of all root-to-leaf path annotations: the world-set the tree
/// denotes, read back syntactically.
pub fn tree_to_wsset(tree: &WsTree) -> WsSet {
    fn walk(tree: &WsTree, prefix: &WsDescriptor, out: &mut Vec<WsDescriptor>) {
        match tree {
            WsTree::Top => out.push(prefix.clone()),
            WsTree::Bot => {}
            WsTree::Times(children) => {
                for child in children {
                    walk(child, prefix, out);
                }
            }
            WsTree::Plus { var, branches } => {
                for (code, child) in branches {
                    let extended = prefix
                        .extended(crate::model::Assignment::new(*var, *code))
                        .expect("variables are unique along a path");
                    walk(child, &extended, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, &WsDescriptor::empty(), &mut out);
    WsSet::from_descriptors(out)
}

/// Debug dump: `*` for ⊗, `+x` for ⊕ on `x` with branch lines `x=i@p`,
/// `T`/`F` for the leaves. Two-space indentation per level.
pub fn dump_tree(tree: &WsTree, table: &WorldTable) -> String {
    fn walk(tree: &WsTree, table: &WorldTable, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match tree {
            WsTree::Top => out.push_str(&format!("{pad}T\n")),
            WsTree::Bot => out.push_str(&format!("{pad}F\n")),
            WsTree::Times(children) => {
                out.push_str(&format!("{pad}*\n"));
                for child in children {
                    walk(child, table, depth + 1, out);
                }
            }
            WsTree::Plus { var, branches } => {
                let name = table.var_name(*var);
                out.push_str(&format!("{pad}+{name}\n"));
                for (code, child) in branches {
                    out.push_str(&format!(
                        "{pad}  {name}={}@{}\n",
                        table.value_label(*var, *code),
                        table.prob(*var, *code)
                    ));
                    walk(child, table, depth + 2, out);
                }
            }
        }
    }
    let mut out = String::new();
    walk(tree, table, 0, &mut out);
    out
}
