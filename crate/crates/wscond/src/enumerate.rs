//! World enumeration: iterate the total valuations of a world table and
//! materialize database instances per world. This is the reference
//! semantics everything else is checked against, and the engine behind
//! the brute-force algorithm and the `enumerate` CLI command.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{WorldTable, WsDescriptor};
use crate::urel::{ProbabilisticDatabase, Value};

/// A total valuation: one value code per variable, indexed by variable id.
pub type Valuation = Vec<u32>;

/// `true` iff the valuation extends the descriptor.
#[inline]
pub fn covers(desc: &WsDescriptor, valuation: &[u32]) -> bool {
    desc.iter().all(|a| valuation[a.var.index()] == a.value)
}

/// Iterator over all `(valuation, probability)` pairs. The first variable
/// cycles fastest, so the order matches the usual world numbering of
/// small examples.
pub struct Valuations<'a> {
    table: &'a WorldTable,
    sizes: Vec<u32>,
    current: Option<Valuation>,
}

impl<'a> Valuations<'a> {
    fn new(table: &'a WorldTable) -> Valuations<'a> {
        let sizes = table
            .var_ids()
            .map(|v| table.domain_size(v) as u32)
            .collect::<Vec<_>>();
        Valuations {
            table,
            current: Some(vec![0; sizes.len()]),
            sizes,
        }
    }
}

impl Iterator for Valuations<'_> {
    type Item = (Valuation, f64);

    fn next(&mut self) -> Option<(Valuation, f64)> {
        let current = self.current.take()?;
        let prob: f64 = self
            .table
            .var_ids()
            .zip(&current)
            .map(|(v, &c)| self.table.prob(v, c))
            .product();
        let mut next = current.clone();
        let mut i = 0;
        loop {
            if i == self.sizes.len() {
                break; // wrapped around: exhausted
            }
            next[i] += 1;
            if next[i] < self.sizes[i] {
                self.current = Some(next);
                break;
            }
            next[i] = 0;
            i += 1;
        }
        Some((current, prob))
    }
}

/// All valuations of the table, guarded by a world-count cap.
pub fn valuations(table: &WorldTable, cap: u64) -> Result<Valuations<'_>> {
    match table.world_count() {
        Some(n) if n <= u128::from(cap) => Ok(Valuations::new(table)),
        _ => Err(Error::ResourceExhausted {
            what: "world enumeration",
            cap,
        }),
    }
}

/// The materialized contents of one possible world.
pub type Instance = BTreeMap<String, Vec<Vec<Value>>>;

/// One enumerated world of a database.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub valuation: Valuation,
    pub probability: f64,
    pub instance: Instance,
}

/// Iterator over every possible world of the database with its probability
/// and materialized instance. Probabilities sum to 1 across the sequence.
pub fn enumerate_worlds<'a>(
    db: &'a ProbabilisticDatabase,
    cap: u64,
) -> Result<impl Iterator<Item = World> + 'a> {
    let vals = valuations(db.world(), cap)?;
    Ok(vals.map(move |(valuation, probability)| {
        let mut instance = Instance::new();
        for (name, rel) in db.relations() {
            let mut rows: Vec<Vec<Value>> = rel
                .rows()
                .iter()
                .filter(|row| covers(&row.wsd, &valuation))
                .map(|row| row.values.clone())
                .collect();
            rows.sort();
            rows.dedup();
            instance.insert(name.to_string(), rows);
        }
        World {
            valuation,
            probability,
            instance,
        }
    }))
}

/// Aggregate the worlds of a database by instance: the weighted possible
/// worlds with syntactically identical contents merged. This is the
/// instance-level semantics used to compare databases.
pub fn weighted_instances(db: &ProbabilisticDatabase, cap: u64) -> Result<BTreeMap<Instance, f64>> {
    let mut out: BTreeMap<Instance, f64> = BTreeMap::new();
    for world in enumerate_worlds(db, cap)? {
        *out.entry(world.instance).or_insert(0.0) += world.probability;
    }
    Ok(out)
}
