//! World tables, world-set descriptors and world-set descriptor sets.
//!
//! A [`WorldTable`] defines a finite set of independent random variables,
//! each with a finite domain and a probability per domain value. A
//! [`WsDescriptor`] is a partial assignment of variables to domain values
//! and denotes the set of worlds (total valuations) extending it; a
//! [`WsSet`] denotes the union of the world-sets of its descriptors.
//!
//! Domain values are interned per variable: a descriptor stores the dense
//! value *code* (the index of the value in the variable's domain), which
//! makes probability lookups and comparisons constant-time and
//! serialization deterministic.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Tolerance used when validating that a variable's probabilities sum to 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Dense identifier of a random variable within one [`WorldTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub u32);

impl VariableId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
struct VarEntry {
    name: String,
    /// Domain value labels; the dense value code is the index here.
    values: Vec<String>,
    probs: Vec<f64>,
}

/// The world table: one entry per variable with its domain and the
/// probability of each assignment.
#[derive(Debug, Clone, Default)]
pub struct WorldTable {
    vars: Vec<VarEntry>,
    by_name: HashMap<String, VariableId>,
}

/// Tokens (variable names and value labels) must survive the textual
/// descriptor form `{x=1;y=2}` and the CSV formats unescaped.
fn check_token(s: &str, what: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Invalid(format!("empty {what}")));
    }
    if s.chars()
        .any(|c| c.is_whitespace() || matches!(c, '{' | '}' | '=' | ';' | ',' | '"'))
    {
        return Err(Error::Invalid(format!(
            "{what} {s:?} contains a delimiter or whitespace"
        )));
    }
    Ok(())
}

impl WorldTable {
    pub fn new() -> WorldTable {
        WorldTable::default()
    }

    /// Add a variable with its full domain. Probabilities must be
    /// non-negative and sum to 1 within [`PROB_SUM_TOLERANCE`]; value labels
    /// must be distinct.
    pub fn add_variable(&mut self, name: &str, domain: &[(&str, f64)]) -> Result<VariableId> {
        check_token(name, "variable name")?;
        if self.by_name.contains_key(name) {
            return Err(Error::InvalidWorldTable(format!(
                "variable {name:?} defined twice"
            )));
        }
        if domain.is_empty() {
            return Err(Error::InvalidWorldTable(format!(
                "variable {name:?} has an empty domain"
            )));
        }
        let mut values = Vec::with_capacity(domain.len());
        let mut probs = Vec::with_capacity(domain.len());
        let mut sum = 0.0;
        for &(label, p) in domain {
            check_token(label, "domain value")?;
            if values.iter().any(|v| v == label) {
                return Err(Error::InvalidWorldTable(format!(
                    "variable {name:?} lists value {label:?} twice"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidWorldTable(format!(
                    "variable {name:?} has invalid probability {p} for value {label:?}"
                )));
            }
            values.push(label.to_string());
            probs.push(p);
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidWorldTable(format!(
                "probabilities of variable {name:?} sum to {sum}, not 1"
            )));
        }
        let id = VariableId(self.vars.len() as u32);
        self.by_name.insert(name.to_string(), id);
        self.vars.push(VarEntry {
            name: name.to_string(),
            values,
            probs,
        });
        Ok(id)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VariableId> {
        (0..self.vars.len() as u32).map(VariableId)
    }

    pub fn var_id(&self, name: &str) -> Result<VariableId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable {
                name: name.to_string(),
            })
    }

    fn entry(&self, var: VariableId) -> Result<&VarEntry> {
        self.vars
            .get(var.index())
            .ok_or(Error::UnknownVariableId { id: var.0 })
    }

    pub fn var_name(&self, var: VariableId) -> &str {
        &self.vars[var.index()].name
    }

    pub fn domain_size(&self, var: VariableId) -> usize {
        self.vars[var.index()].values.len()
    }

    pub fn value_label(&self, var: VariableId, code: u32) -> &str {
        &self.vars[var.index()].values[code as usize]
    }

    pub fn value_labels(&self, var: VariableId) -> &[String] {
        &self.vars[var.index()].values
    }

    pub fn probs(&self, var: VariableId) -> &[f64] {
        &self.vars[var.index()].probs
    }

    /// Probability of the assignment `var -> code`.
    #[inline]
    pub fn prob(&self, var: VariableId, code: u32) -> f64 {
        self.vars[var.index()].probs[code as usize]
    }

    pub fn value_code(&self, var: VariableId, label: &str) -> Result<u32> {
        let entry = self.entry(var)?;
        entry
            .values
            .iter()
            .position(|v| v == label)
            .map(|i| i as u32)
            .ok_or_else(|| Error::OutOfDomain {
                var: entry.name.clone(),
                value: label.to_string(),
            })
    }

    /// Build an assignment from names, validating it against the table.
    pub fn assignment(&self, var: &str, value: &str) -> Result<Assignment> {
        let id = self.var_id(var)?;
        let code = self.value_code(id, value)?;
        Ok(Assignment {
            var: id,
            value: code,
        })
    }

    /// Number of worlds (product of domain sizes), or `None` on overflow.
    pub fn world_count(&self) -> Option<u128> {
        let mut n: u128 = 1;
        for entry in &self.vars {
            n = n.checked_mul(entry.values.len() as u128)?;
            if n > u128::from(u64::MAX) {
                return None;
            }
        }
        Some(n)
    }

    /// Read the CSV form: header `var,value,prob`, one row per triple.
    /// Rows of one variable must be contiguous; variables and values are
    /// numbered in order of first appearance.
    pub fn from_csv<R: Read>(reader: R) -> Result<WorldTable> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        {
            let headers = csv.headers()?;
            let expect = ["var", "value", "prob"];
            if headers.len() != 3 || headers.iter().zip(expect).any(|(h, e)| h != e) {
                return Err(Error::Parse(format!(
                    "world table header must be `var,value,prob`, got {headers:?}"
                )));
            }
        }
        let mut table = WorldTable::new();
        let mut current: Option<(String, Vec<(String, f64)>)> = None;
        let flush = |table: &mut WorldTable,
                     group: Option<(String, Vec<(String, f64)>)>|
         -> Result<()> {
            if let Some((name, rows)) = group {
                let domain: Vec<(&str, f64)> = rows.iter().map(|(v, p)| (v.as_str(), *p)).collect();
                // add_variable rejects re-definitions, which is exactly the
                // non-contiguous-rows case
                table.add_variable(&name, &domain).map_err(|e| match e {
                    Error::InvalidWorldTable(msg) if msg.contains("defined twice") => {
                        Error::Parse(format!("rows of variable {name:?} are not contiguous"))
                    }
                    other => other,
                })?;
            }
            Ok(())
        };
        for record in csv.records() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::Parse(format!(
                    "world table row {record:?} has wrong arity"
                )));
            }
            let var = &record[0];
            let value = record[1].to_string();
            let prob: f64 = record[2]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad probability {:?}", &record[2])))?;
            match &mut current {
                Some((name, rows)) if name == var => rows.push((value, prob)),
                _ => {
                    flush(&mut table, current.take())?;
                    current = Some((var.to_string(), vec![(value, prob)]));
                }
            }
        }
        flush(&mut table, current.take())?;
        Ok(table)
    }

    /// Write the CSV form. Variables in id order, values in code order;
    /// probabilities use the shortest round-tripping decimal form.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["var", "value", "prob"])?;
        for entry in &self.vars {
            for (value, prob) in entry.values.iter().zip(&entry.probs) {
                csv.write_record([entry.name.as_str(), value, &prob.to_string()])?;
            }
        }
        csv.flush()?;
        Ok(())
    }
}

/// One variable assignment `var -> value` (value is the dense code).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub var: VariableId,
    pub value: u32,
}

impl Assignment {
    pub fn new(var: VariableId, value: u32) -> Assignment {
        Assignment { var, value }
    }

    pub fn validate(&self, table: &WorldTable) -> Result<()> {
        let entry = table.entry(self.var)?;
        if self.value as usize >= entry.values.len() {
            return Err(Error::OutOfDomain {
                var: entry.name.clone(),
                value: format!("#code {}", self.value),
            });
        }
        Ok(())
    }
}

type AssignmentVec = SmallVec<[Assignment; 4]>;

/// A world-set descriptor: a functional set of assignments, kept sorted by
/// variable id so that equality, hashing and serialization are canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WsDescriptor {
    assignments: AssignmentVec,
}

impl WsDescriptor {
    /// The empty (universal) descriptor, denoting all worlds.
    pub fn empty() -> WsDescriptor {
        WsDescriptor::default()
    }

    /// Build from assignments. Fails if two assignments give one variable
    /// different values; exact duplicates collapse.
    pub fn from_assignments<I: IntoIterator<Item = Assignment>>(iter: I) -> Result<WsDescriptor> {
        let mut assignments: AssignmentVec = iter.into_iter().collect();
        assignments.sort_unstable();
        assignments.dedup();
        for pair in assignments.windows(2) {
            if pair[0].var == pair[1].var {
                return Err(Error::Invalid(format!(
                    "descriptor assigns variable id {} twice",
                    pair[0].var.0
                )));
            }
        }
        Ok(WsDescriptor { assignments })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assignment> {
        self.assignments.iter()
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    /// Value assigned to `var`, if any.
    pub fn get(&self, var: VariableId) -> Option<u32> {
        self.assignments
            .binary_search_by_key(&var, |a| a.var)
            .ok()
            .map(|i| self.assignments[i].value)
    }

    pub fn mentions(&self, var: VariableId) -> bool {
        self.get(var).is_some()
    }

    pub fn validate(&self, table: &WorldTable) -> Result<()> {
        for a in &self.assignments {
            a.validate(table)?;
        }
        Ok(())
    }

    /// Probability of the denoted world-set: the product of the assignment
    /// probabilities (1 for the empty descriptor).
    pub fn probability(&self, table: &WorldTable) -> Result<f64> {
        self.validate(table)?;
        Ok(self.probability_unchecked(table))
    }

    /// Like [`Self::probability`] but assumes the descriptor is valid.
    #[inline]
    pub fn probability_unchecked(&self, table: &WorldTable) -> f64 {
        self.assignments
            .iter()
            .map(|a| table.prob(a.var, a.value))
            .product()
    }

    /// Drop assignments to singleton-domain variables. The denoted
    /// world-set is unchanged; the syntactic property checks below assume
    /// their inputs went through this.
    pub fn normalize(&self, table: &WorldTable) -> Result<WsDescriptor> {
        self.validate(table)?;
        let assignments = self
            .assignments
            .iter()
            .filter(|a| table.domain_size(a.var) > 1)
            .copied()
            .collect();
        Ok(WsDescriptor { assignments })
    }

    /// Two descriptors are consistent iff their union is functional.
    pub fn consistent(&self, other: &WsDescriptor) -> bool {
        !self.conflicts(other)
    }

    /// Mutual exclusion: some variable is assigned differently in each
    /// (exact on normalized descriptors).
    pub fn is_mutex(&self, other: &WsDescriptor) -> bool {
        self.conflicts(other)
    }

    fn conflicts(&self, other: &WsDescriptor) -> bool {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.assignments, &other.assignments);
        while i < a.len() && j < b.len() {
            match a[i].var.cmp(&b[j].var) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if a[i].value != b[j].value {
                        return true;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        false
    }

    /// Independence: no variable in common (exact on normalized
    /// descriptors).
    pub fn is_independent(&self, other: &WsDescriptor) -> bool {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.assignments, &other.assignments);
        while i < a.len() && j < b.len() {
            match a[i].var.cmp(&b[j].var) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// True iff `other`'s assignments are a subset of `self`'s, i.e. `self`
    /// extends `other` as a mapping. On normalized descriptors this holds
    /// exactly when the world-set of `self` is contained in that of `other`.
    pub fn extends(&self, other: &WsDescriptor) -> bool {
        if other.assignments.len() > self.assignments.len() {
            return false;
        }
        let mut i = 0;
        for b in &other.assignments {
            loop {
                if i >= self.assignments.len() {
                    return false;
                }
                match self.assignments[i].var.cmp(&b.var) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => return false,
                    std::cmp::Ordering::Equal => {
                        if self.assignments[i].value != b.value {
                            return false;
                        }
                        i += 1;
                        break;
                    }
                }
            }
        }
        true
    }

    /// Union of two consistent descriptors, `None` when inconsistent.
    pub fn merge(&self, other: &WsDescriptor) -> Option<WsDescriptor> {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.assignments, &other.assignments);
        let mut out = AssignmentVec::with_capacity(a.len() + b.len());
        while i < a.len() && j < b.len() {
            match a[i].var.cmp(&b[j].var) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if a[i].value != b[j].value {
                        return None;
                    }
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Some(WsDescriptor { assignments: out })
    }

    /// `self` with one assignment added; `None` if `var` is bound to a
    /// different value.
    pub fn extended(&self, a: Assignment) -> Option<WsDescriptor> {
        match self.assignments.binary_search_by_key(&a.var, |x| x.var) {
            Ok(i) => (self.assignments[i].value == a.value).then(|| self.clone()),
            Err(i) => {
                let mut assignments = self.assignments.clone();
                assignments.insert(i, a);
                Some(WsDescriptor { assignments })
            }
        }
    }

    /// `self` without any assignment to `var`.
    pub fn without(&self, var: VariableId) -> WsDescriptor {
        let assignments = self
            .assignments
            .iter()
            .filter(|a| a.var != var)
            .copied()
            .collect();
        WsDescriptor { assignments }
    }

    /// Assignments of `other` not present in `self` (set difference on
    /// assignment pairs).
    pub fn missing_from(&self, other: &WsDescriptor) -> Vec<Assignment> {
        other
            .assignments
            .iter()
            .filter(|a| self.get(a.var) != Some(a.value))
            .copied()
            .collect()
    }

    /// Textual form `{x=1;y=2}` (empty descriptor: `{}`).
    pub fn display<'a>(&'a self, table: &'a WorldTable) -> DescriptorDisplay<'a> {
        DescriptorDisplay { d: self, table }
    }

    /// Parse the textual form against a world table.
    pub fn parse(text: &str, table: &WorldTable) -> Result<WsDescriptor> {
        let text = text.trim();
        let inner = text
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("descriptor {text:?} is not wrapped in {{}}")))?;
        let mut assignments = Vec::new();
        for part in inner.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (var, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad assignment {part:?}")))?;
            assignments.push(table.assignment(var.trim(), value.trim())?);
        }
        WsDescriptor::from_assignments(assignments)
    }
}

pub struct DescriptorDisplay<'a> {
    d: &'a WsDescriptor,
    table: &'a WorldTable,
}

impl fmt::Display for DescriptorDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.d.assignments.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(
                f,
                "{}={}",
                self.table.var_name(a.var),
                self.table.value_label(a.var, a.value)
            )?;
        }
        write!(f, "}}")
    }
}

/// A set of ws-descriptors, kept sorted and duplicate-free. Denotes the
/// union of the world-sets of its members. Redundant (contained)
/// descriptors are permitted; only exact syntactic duplicates collapse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct WsSet {
    descriptors: Vec<WsDescriptor>,
}

impl WsSet {
    pub fn new() -> WsSet {
        WsSet::default()
    }

    /// The ws-set `{∅}` denoting all worlds.
    pub fn universal() -> WsSet {
        WsSet {
            descriptors: vec![WsDescriptor::empty()],
        }
    }

    pub fn from_descriptors<I: IntoIterator<Item = WsDescriptor>>(iter: I) -> WsSet {
        let mut descriptors: Vec<WsDescriptor> = iter.into_iter().collect();
        descriptors.sort_unstable();
        descriptors.dedup();
        WsSet { descriptors }
    }

    /// Wrap a vector already in canonical order without re-sorting.
    /// Callers guarantee sortedness; this sits on hot paths.
    pub(crate) fn from_sorted_unchecked(descriptors: Vec<WsDescriptor>) -> WsSet {
        WsSet { descriptors }
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, WsDescriptor> {
        self.descriptors.iter()
    }

    pub fn descriptors(&self) -> &[WsDescriptor] {
        &self.descriptors
    }

    pub fn insert(&mut self, d: WsDescriptor) {
        if let Err(i) = self.descriptors.binary_search(&d) {
            self.descriptors.insert(i, d);
        }
    }

    pub fn contains_descriptor(&self, d: &WsDescriptor) -> bool {
        self.descriptors.binary_search(d).is_ok()
    }

    /// True iff the universal descriptor is a member.
    pub fn has_universal(&self) -> bool {
        self.descriptors.first().is_some_and(|d| d.is_empty())
    }

    pub fn validate(&self, table: &WorldTable) -> Result<()> {
        for d in &self.descriptors {
            d.validate(table)?;
        }
        Ok(())
    }

    pub fn normalize(&self, table: &WorldTable) -> Result<WsSet> {
        let descriptors: Result<Vec<_>> = self
            .descriptors
            .iter()
            .map(|d| d.normalize(table))
            .collect();
        Ok(WsSet::from_descriptors(descriptors?))
    }

    /// Pairwise mutual exclusion across the cross product (vacuously true
    /// when either side is empty).
    pub fn mutex_with(&self, other: &WsSet) -> bool {
        self.descriptors
            .iter()
            .all(|d1| other.descriptors.iter().all(|d2| d1.is_mutex(d2)))
    }

    /// Pairwise independence across the cross product.
    pub fn independent_of(&self, other: &WsSet) -> bool {
        self.descriptors
            .iter()
            .all(|d1| other.descriptors.iter().all(|d2| d1.is_independent(d2)))
    }

    /// Textual form: one descriptor per line.
    pub fn to_text(&self, table: &WorldTable) -> String {
        let mut out = String::new();
        for d in &self.descriptors {
            out.push_str(&d.display(table).to_string());
            out.push('\n');
        }
        out
    }

    /// Parse the textual form (one descriptor per line, blank lines
    /// ignored; an empty file is the empty ws-set).
    pub fn parse(text: &str, table: &WorldTable) -> Result<WsSet> {
        let mut descriptors = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            descriptors.push(WsDescriptor::parse(line, table)?);
        }
        Ok(WsSet::from_descriptors(descriptors))
    }
}

impl<'a> IntoIterator for &'a WsSet {
    type Item = &'a WsDescriptor;
    type IntoIter = std::slice::Iter<'a, WsDescriptor>;
    fn into_iter(self) -> Self::IntoIter {
        self.descriptors.iter()
    }
}
