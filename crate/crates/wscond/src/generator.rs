//! Deterministic synthetic instances: the hard ws-set family behind the
//! easy-hard-easy study, tuple-independent databases, and the brute-force
//! reference engine.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::model::{Assignment, VariableId, WorldTable, WsDescriptor, WsSet};
use crate::numeric::CompensatedSum;
use crate::urel::{ProbabilisticDatabase, URelation, Value};

/// Hard-instance generator: `n` variables of domain size `r` with uniform
/// weights, split into `s` equal partitions; `w` distinct descriptors of
/// length `s`, the i-th assignment drawn from partition i. Deterministic
/// given the seed.
pub fn gen_hard_instance(n: u64, r: u64, s: u64, w: u64, seed: u64) -> Result<(WorldTable, WsSet)> {
    if n == 0 || s == 0 || r < 2 || w == 0 {
        return Err(Error::Invalid(format!(
            "need n ≥ 1, r ≥ 2, s ≥ 1, w ≥ 1 (got n={n}, r={r}, s={s}, w={w})"
        )));
    }
    if !n.is_multiple_of(s) {
        return Err(Error::Invalid(format!("s={s} must divide n={n}")));
    }
    let per_partition = n / s;
    // number of distinct descriptors: (per_partition * r)^s
    let choices = (per_partition as u128) * (r as u128);
    let mut capacity: u128 = 1;
    for _ in 0..s {
        capacity = capacity.saturating_mul(choices);
        if capacity > u128::from(u64::MAX) {
            break;
        }
    }
    if u128::from(w) > capacity {
        return Err(Error::Invalid(format!(
            "w={w} exceeds the {capacity} distinct descriptors of this configuration"
        )));
    }

    let mut table = WorldTable::new();
    let labels: Vec<String> = (0..r).map(|v| v.to_string()).collect();
    let uniform = 1.0 / r as f64;
    let mut domain: Vec<(&str, f64)> = labels.iter().map(|l| (l.as_str(), uniform)).collect();
    // make the weights sum to exactly 1.0 in floating point
    domain.last_mut().unwrap().1 = 1.0 - uniform * (r - 1) as f64;
    for i in 0..n {
        table.add_variable(&format!("x{i}"), &domain)?;
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut seen: HashSet<WsDescriptor> = HashSet::with_capacity(w as usize);
    let max_attempts = 1_000_000u64.max(w.saturating_mul(200));
    let mut attempts = 0u64;
    while (seen.len() as u64) < w {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::ResourceExhausted {
                what: "generator rejection sampling",
                cap: max_attempts,
            });
        }
        let assignments = (0..s).map(|i| {
            let var = i * per_partition + rng.gen_range(0..per_partition);
            let code = rng.gen_range(0..r) as u32;
            Assignment::new(VariableId(var as u32), code)
        });
        seen.insert(WsDescriptor::from_assignments(assignments)?);
    }
    Ok((table, WsSet::from_descriptors(seen)))
}

/// Tuple-independent database: `t` tuples in one relation `R`, each
/// guarded by a fresh Boolean variable with a random probability in (0,1).
/// The first column is the tuple index; any further columns get small
/// random integers.
pub fn gen_tuple_independent_db(
    t: u64,
    columns: &[&str],
    seed: u64,
) -> Result<ProbabilisticDatabase> {
    if columns.is_empty() {
        return Err(Error::Invalid("need at least one column".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut table = WorldTable::new();
    let mut rows = Vec::with_capacity(t as usize);
    for i in 0..t {
        let p = loop {
            let p: f64 = rng.gen();
            if p > 0.0 && p < 1.0 {
                break p;
            }
        };
        let var = table.add_variable(&format!("t{i}"), &[("0", 1.0 - p), ("1", p)])?;
        let wsd = WsDescriptor::from_assignments([Assignment::new(var, 1)])?;
        let mut values = vec![Value::Int(i as i64)];
        for _ in 1..columns.len() {
            values.push(Value::Int(rng.gen_range(0..10)));
        }
        rows.push((wsd, values));
    }
    let rel = URelation::from_rows(columns.iter().map(|c| c.to_string()).collect(), rows)?;
    let mut db = ProbabilisticDatabase::new(table);
    db.insert_relation("R", rel)?;
    Ok(db)
}

/// Reference probability: iterate every world and add up the weights of
/// those covered by some descriptor.
pub fn brute_force_probability(s: &WsSet, table: &WorldTable, cap: u64) -> Result<f64> {
    s.validate(table)?;
    let mut acc = CompensatedSum::new();
    for (valuation, p) in crate::enumerate::valuations(table, cap)? {
        if s.iter().any(|d| crate::enumerate::covers(d, &valuation)) {
            acc.add(p);
        }
    }
    Ok(acc.total())
}
