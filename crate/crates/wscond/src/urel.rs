//! U-relations: relations whose tuples carry ws-descriptors, plus the
//! positive relational algebra over them and the on-disk database format
//! (a directory holding `world.csv` and one CSV per relation).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::budget::Caps;
use crate::error::{Error, Result};
use crate::model::{WorldTable, WsDescriptor, WsSet};
use crate::query::Pred;
use crate::wsops;

/// Data values are integers or strings; a CSV cell that parses as `i64`
/// is an integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl Value {
    pub fn parse(cell: &str) -> Value {
        match cell.parse::<i64>() {
            Ok(n) => Value::Int(n),
            Err(_) => Value::Str(cell.to_string()),
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Str(_) => "string",
        }
    }

    /// Ordering within one type; comparing across types is an error.
    pub fn compare(&self, other: &Value) -> Result<std::cmp::Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Ok(a.cmp(b)),
            _ => Err(Error::TypeMismatch {
                left: self.type_name().to_string(),
                right: other.type_name().to_string(),
            }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s}"),
        }
    }
}

/// One tuple with its descriptor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct URow {
    pub wsd: WsDescriptor,
    pub values: Vec<Value>,
}

/// A U-relation: named columns and a set of descriptor-annotated rows.
/// Rows are kept sorted by (descriptor, values); exact duplicates collapse
/// (set semantics).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct URelation {
    columns: Vec<String>,
    rows: Vec<URow>,
}

fn check_column(name: &str) -> Result<()> {
    if name.is_empty()
        || name == "wsd"
        || name.chars().any(|c| {
            c.is_whitespace() || matches!(c, '{' | '}' | '=' | ';' | ',' | '"' | '(' | ')')
        })
    {
        return Err(Error::Invalid(format!("invalid column name {name:?}")));
    }
    Ok(())
}

impl URelation {
    pub fn new(columns: Vec<String>) -> Result<URelation> {
        for c in &columns {
            check_column(c)?;
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::SchemaMismatch(format!("column {c:?} appears twice")));
            }
        }
        Ok(URelation {
            columns,
            rows: Vec::new(),
        })
    }

    pub fn from_rows(
        columns: Vec<String>,
        rows: Vec<(WsDescriptor, Vec<Value>)>,
    ) -> Result<URelation> {
        let mut rel = URelation::new(columns)?;
        for (wsd, values) in rows {
            rel.push(wsd, values)?;
        }
        Ok(rel)
    }

    pub fn push(&mut self, wsd: WsDescriptor, values: Vec<Value>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "row arity {} does not match schema arity {}",
                values.len(),
                self.columns.len()
            )));
        }
        let row = URow { wsd, values };
        if let Err(i) = self.rows.binary_search(&row) {
            self.rows.insert(i, row);
        }
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[URow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn {
                name: name.to_string(),
            })
    }

    /// All descriptors of the relation as a ws-set (the `WSD` projection).
    pub fn wsset(&self) -> WsSet {
        WsSet::from_descriptors(self.rows.iter().map(|r| r.wsd.clone()))
    }

    /// Selection on data columns; descriptors pass through untouched.
    pub fn select(&self, pred: &Pred) -> Result<URelation> {
        let index = self.index_map();
        let mut out = URelation::new(self.columns.clone())?;
        for row in &self.rows {
            if pred.eval(&index, &row.values)? {
                out.push(row.wsd.clone(), row.values.clone())?;
            }
        }
        Ok(out)
    }

    /// Projection; the descriptor column is always kept, duplicate
    /// (descriptor, values) rows collapse.
    pub fn project(&self, columns: &[&str]) -> Result<URelation> {
        let indices: Result<Vec<usize>> = columns.iter().map(|c| self.column_index(c)).collect();
        let indices = indices?;
        let mut out = URelation::new(columns.iter().map(|c| c.to_string()).collect())?;
        for row in &self.rows {
            let values = indices.iter().map(|&i| row.values[i].clone()).collect();
            out.push(row.wsd.clone(), values)?;
        }
        Ok(out)
    }

    /// Join under a data predicate. A pair of rows joins when the predicate
    /// holds on the combined tuple *and* the two descriptors are
    /// consistent; the output descriptor is their union. Column names are
    /// disambiguated by the caller-supplied prefixes.
    pub fn join(
        &self,
        other: &URelation,
        left_prefix: &str,
        right_prefix: &str,
        pred: &Pred,
    ) -> Result<URelation> {
        let mut columns: Vec<String> = Vec::new();
        columns.extend(self.columns.iter().map(|c| format!("{left_prefix}{c}")));
        columns.extend(other.columns.iter().map(|c| format!("{right_prefix}{c}")));
        let mut out = URelation::new(columns)?;
        let names = out.columns.clone();
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        for left in &self.rows {
            for right in &other.rows {
                let Some(wsd) = left.wsd.merge(&right.wsd) else {
                    continue;
                };
                let mut values = left.values.clone();
                values.extend(right.values.iter().cloned());
                if pred.eval(&index, &values)? {
                    out.push(wsd, values)?;
                }
            }
        }
        Ok(out)
    }

    fn check_same_schema(&self, other: &URelation) -> Result<()> {
        if self.columns != other.columns {
            return Err(Error::SchemaMismatch(format!(
                "{:?} vs {:?}",
                self.columns, other.columns
            )));
        }
        Ok(())
    }

    /// Set union: per data tuple, the union of the descriptor sets.
    pub fn union(&self, other: &URelation) -> Result<URelation> {
        self.check_same_schema(other)?;
        let mut out = self.clone();
        for row in &other.rows {
            out.push(row.wsd.clone(), row.values.clone())?;
        }
        Ok(out)
    }

    /// Set difference: per data tuple, the descriptor-set difference;
    /// tuples whose descriptor set becomes empty are dropped.
    pub fn difference(
        &self,
        other: &URelation,
        table: &WorldTable,
        caps: &Caps,
    ) -> Result<URelation> {
        self.check_same_schema(other)?;
        let mut groups: BTreeMap<&[Value], Vec<WsDescriptor>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry(&row.values).or_default().push(row.wsd.clone());
        }
        let mut sub: BTreeMap<&[Value], Vec<WsDescriptor>> = BTreeMap::new();
        for row in &other.rows {
            sub.entry(&row.values).or_default().push(row.wsd.clone());
        }
        let mut out = URelation::new(self.columns.clone())?;
        for (values, descriptors) in groups {
            let s1 = WsSet::from_descriptors(descriptors);
            let s2 = match sub.get(values) {
                Some(ds) => WsSet::from_descriptors(ds.iter().cloned()),
                None => WsSet::new(),
            };
            for d in &wsops::diff(&s1, &s2, table, caps)? {
                out.push(d.clone(), values.to_vec())?;
            }
        }
        Ok(out)
    }

    fn index_map(&self) -> HashMap<&str, usize> {
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect()
    }

    /// Read the CSV form: header `wsd,<col1>,...,<colk>`; descriptors in
    /// their textual form, parsed against the world table.
    pub fn from_csv<R: Read>(reader: R, table: &WorldTable) -> Result<URelation> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let columns: Vec<String> = {
            let headers = csv.headers()?;
            if headers.is_empty() || &headers[0] != "wsd" {
                return Err(Error::Parse(format!(
                    "U-relation header must start with `wsd`, got {headers:?}"
                )));
            }
            headers.iter().skip(1).map(|h| h.to_string()).collect()
        };
        let mut rel = URelation::new(columns)?;
        let mut rows: Vec<URow> = Vec::new();
        for record in csv.records() {
            let record = record?;
            if record.len() != rel.columns.len() + 1
                // a nullary row serializes as a single field
                && !(rel.columns.is_empty() && record.len() == 1)
            {
                return Err(Error::Parse(format!("row {record:?} has wrong arity")));
            }
            let wsd = WsDescriptor::parse(&record[0], table)?;
            let values = record.iter().skip(1).map(Value::parse).collect();
            rows.push(URow { wsd, values });
        }
        rows.sort_unstable();
        rows.dedup();
        rel.rows = rows;
        Ok(rel)
    }

    pub fn to_csv<W: Write>(&self, writer: W, table: &WorldTable) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["wsd".to_string()];
        header.extend(self.columns.clone());
        csv.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.wsd.display(table).to_string()];
            record.extend(row.values.iter().map(|v| v.to_string()));
            csv.write_record(&record)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// A world table plus named U-relations sharing it. Immutable once built;
/// algebra operations and conditioning produce new values.
#[derive(Debug, Clone)]
pub struct ProbabilisticDatabase {
    world: WorldTable,
    relations: BTreeMap<String, URelation>,
}

impl ProbabilisticDatabase {
    pub fn new(world: WorldTable) -> ProbabilisticDatabase {
        ProbabilisticDatabase {
            world,
            relations: BTreeMap::new(),
        }
    }

    pub fn world(&self) -> &WorldTable {
        &self.world
    }

    pub fn insert_relation(&mut self, name: &str, relation: URelation) -> Result<()> {
        check_column(name)?;
        if self.relations.contains_key(name) {
            return Err(Error::SchemaMismatch(format!(
                "relation {name:?} already exists"
            )));
        }
        for row in relation.rows() {
            row.wsd.validate(&self.world)?;
        }
        self.relations.insert(name.to_string(), relation);
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Result<&URelation> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::UnknownColumn {
                name: format!("relation {name}"),
            })
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &URelation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(|n| n.as_str())
    }

    /// Load a database directory: `world.csv` plus one `<name>.csv` per
    /// relation.
    pub fn load_dir<P: AsRef<Path>>(dir: P) -> Result<ProbabilisticDatabase> {
        let dir = dir.as_ref();
        let world_path = dir.join("world.csv");
        let world = WorldTable::from_csv(fs::File::open(&world_path)?)?;
        let mut db = ProbabilisticDatabase::new(world);
        let mut entries: Vec<_> = fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| {
                p.extension().is_some_and(|e| e == "csv")
                    && p.file_stem().is_some_and(|s| s != "world")
            })
            .collect();
        entries.sort();
        for path in entries {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Parse(format!("bad relation file name {path:?}")))?
                .to_string();
            let rel = URelation::from_csv(fs::File::open(&path)?, &db.world)?;
            db.insert_relation(&name, rel)?;
        }
        Ok(db)
    }

    /// Write the directory format, creating the directory if needed.
    pub fn save_dir<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut buf = Vec::new();
        self.world.to_csv(&mut buf)?;
        fs::write(dir.join("world.csv"), &buf)?;
        for (name, rel) in &self.relations {
            let mut buf = Vec::new();
            rel.to_csv(&mut buf, &self.world)?;
            fs::write(dir.join(format!("{name}.csv")), &buf)?;
        }
        Ok(())
    }

    /// Rebuild with a different world table and rewritten relations,
    /// revalidating every descriptor.
    pub fn with_rewritten(
        world: WorldTable,
        relations: BTreeMap<String, URelation>,
    ) -> Result<ProbabilisticDatabase> {
        let mut db = ProbabilisticDatabase::new(world);
        for (name, rel) in relations {
            db.insert_relation(&name, rel)?;
        }
        Ok(db)
    }
}
