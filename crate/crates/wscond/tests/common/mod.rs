//! Fixtures and independent oracles for the integration suites. The
//! oracles enumerate worlds directly with a mixed-radix counter; they do
//! not call the engines they are used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::Rng;

use wscond::model::{Assignment, VariableId, WorldTable, WsDescriptor, WsSet};
use wscond::urel::{ProbabilisticDatabase, URelation, Value};

pub fn d(table: &WorldTable, text: &str) -> WsDescriptor {
    WsDescriptor::parse(text, table).unwrap()
}

/// Two independent persons with uncertain SSNs: j in {1,7} (.2/.8) and
/// b in {4,7} (.3/.7).
pub fn two_person_table() -> WorldTable {
    let mut w = WorldTable::new();
    w.add_variable("j", &[("1", 0.2), ("7", 0.8)]).unwrap();
    w.add_variable("b", &[("4", 0.3), ("7", 0.7)]).unwrap();
    w
}

/// The SSN database over [`two_person_table`].
pub fn ssn_db() -> ProbabilisticDatabase {
    let w = two_person_table();
    let rel = URelation::from_rows(
        vec!["SSN".into(), "NAME".into()],
        vec![
            (
                d(&w, "{j=1}"),
                vec![Value::Int(1), Value::Str("John".into())],
            ),
            (
                d(&w, "{j=7}"),
                vec![Value::Int(7), Value::Str("John".into())],
            ),
            (
                d(&w, "{b=4}"),
                vec![Value::Int(4), Value::Str("Bill".into())],
            ),
            (
                d(&w, "{b=7}"),
                vec![Value::Int(7), Value::Str("Bill".into())],
            ),
        ],
    )
    .unwrap();
    let mut db = ProbabilisticDatabase::new(w);
    db.insert_relation("R", rel).unwrap();
    db
}

/// Five-variable world table of the decomposition examples.
pub fn five_var_table() -> WorldTable {
    let mut w = WorldTable::new();
    w.add_variable("x", &[("1", 0.1), ("2", 0.4), ("3", 0.5)])
        .unwrap();
    w.add_variable("y", &[("1", 0.2), ("2", 0.8)]).unwrap();
    w.add_variable("z", &[("1", 0.4), ("2", 0.6)]).unwrap();
    w.add_variable("u", &[("1", 0.7), ("2", 0.3)]).unwrap();
    w.add_variable("v", &[("1", 0.5), ("2", 0.5)]).unwrap();
    w
}

/// The five-descriptor ws-set paired with [`five_var_table`]; exact
/// probability 0.7578.
pub fn five_var_set(w: &WorldTable) -> WsSet {
    WsSet::from_descriptors([
        d(w, "{x=1}"),
        d(w, "{x=2;y=1}"),
        d(w, "{x=2;z=1}"),
        d(w, "{u=1;v=1}"),
        d(w, "{u=2}"),
    ])
}

/// All total valuations with probabilities, first variable fastest.
pub fn all_valuations(w: &WorldTable) -> Vec<(Vec<u32>, f64)> {
    let sizes: Vec<u32> = w.var_ids().map(|v| w.domain_size(v) as u32).collect();
    let mut out = Vec::new();
    let mut current = vec![0u32; sizes.len()];
    loop {
        let p: f64 = w
            .var_ids()
            .zip(&current)
            .map(|(v, &c)| w.prob(v, c))
            .product();
        out.push((current.clone(), p));
        let mut i = 0;
        loop {
            if i == sizes.len() {
                return out;
            }
            current[i] += 1;
            if current[i] < sizes[i] {
                break;
            }
            current[i] = 0;
            i += 1;
        }
    }
}

pub fn covers(desc: &WsDescriptor, valuation: &[u32]) -> bool {
    desc.iter().all(|a| valuation[a.var.index()] == a.value)
}

pub fn set_covers(s: &WsSet, valuation: &[u32]) -> bool {
    s.iter().any(|desc| covers(desc, valuation))
}

/// Membership mask of `ω(S)` over the valuations of `w`, in enumeration
/// order.
pub fn omega_mask(s: &WsSet, w: &WorldTable) -> Vec<bool> {
    all_valuations(w)
        .iter()
        .map(|(val, _)| set_covers(s, val))
        .collect()
}

/// Brute-force probability with compensated summation.
pub fn brute_prob(s: &WsSet, w: &WorldTable) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (val, p) in all_valuations(w) {
        if set_covers(s, &val) {
            let t = sum + p;
            comp += if sum.abs() >= p.abs() {
                (sum - t) + p
            } else {
                (p - t) + sum
            };
            sum = t;
        }
    }
    sum + comp
}

/// Random world table with at most `max_vars` variables of domain size at
/// most `max_dom`, keeping the world count under `world_cap`.
pub fn random_world_table(
    rng: &mut StdRng,
    max_vars: usize,
    max_dom: usize,
    world_cap: u64,
) -> WorldTable {
    let mut w = WorldTable::new();
    let vars = rng.gen_range(1..=max_vars);
    let mut worlds = 1u64;
    for i in 0..vars {
        let mut dom = rng.gen_range(2..=max_dom);
        while worlds.saturating_mul(dom as u64) > world_cap && dom > 2 {
            dom -= 1;
        }
        if worlds.saturating_mul(dom as u64) > world_cap {
            break;
        }
        worlds *= dom as u64;
        let raw: Vec<f64> = (0..dom).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let labels: Vec<String> = (0..dom).map(|k| k.to_string()).collect();
        let domain: Vec<(&str, f64)> = labels
            .iter()
            .zip(&raw)
            .map(|(l, p)| (l.as_str(), p / total))
            .collect();
        w.add_variable(&format!("v{i}"), &domain).unwrap();
    }
    w
}

pub fn random_descriptor(rng: &mut StdRng, w: &WorldTable, max_len: usize) -> WsDescriptor {
    let n = w.num_vars();
    let len = rng.gen_range(0..=max_len.min(n));
    let mut ids: Vec<u32> = (0..n as u32).collect();
    for i in 0..len {
        let j = rng.gen_range(i..n);
        ids.swap(i, j);
    }
    let assignments = ids[..len].iter().map(|&id| {
        let var = VariableId(id);
        let code = rng.gen_range(0..w.domain_size(var)) as u32;
        Assignment::new(var, code)
    });
    WsDescriptor::from_assignments(assignments).unwrap()
}

pub fn random_wsset(
    rng: &mut StdRng,
    w: &WorldTable,
    max_descriptors: usize,
    max_len: usize,
) -> WsSet {
    let count = rng.gen_range(0..=max_descriptors);
    WsSet::from_descriptors((0..count).map(|_| random_descriptor(rng, w, max_len)))
}

/// Nonempty random ws-set (used where evidence must be satisfiable).
pub fn random_nonempty_wsset(
    rng: &mut StdRng,
    w: &WorldTable,
    max_descriptors: usize,
    max_len: usize,
) -> WsSet {
    loop {
        let s = random_wsset(rng, w, max_descriptors, max_len);
        if !s.is_empty() {
            return s;
        }
    }
}

/// Random database over a random world table: one or two relations with
/// random descriptor-annotated integer rows.
pub fn random_db(rng: &mut StdRng, world_cap: u64) -> ProbabilisticDatabase {
    let w = random_world_table(rng, 8, 3, world_cap);
    let mut db = ProbabilisticDatabase::new(w);
    let relations = rng.gen_range(1..=2);
    for r in 0..relations {
        let cols = rng.gen_range(1..=2);
        let columns: Vec<String> = (0..cols).map(|c| format!("c{c}")).collect();
        let mut rel = URelation::new(columns).unwrap();
        for _ in 0..rng.gen_range(1..=5) {
            let desc = random_descriptor(rng, db.world(), 3);
            let values: Vec<Value> = (0..cols).map(|_| Value::Int(rng.gen_range(0..4))).collect();
            rel.push(desc, values).unwrap();
        }
        let name = format!("R{r}");
        db.insert_relation(&name, rel).unwrap();
    }
    db
}

/// Weighted instance map restricted to one relation.
pub fn instances_of_relation(
    db: &ProbabilisticDatabase,
    name: &str,
    cap: u64,
) -> BTreeMap<Vec<Vec<Value>>, f64> {
    let mut out: BTreeMap<Vec<Vec<Value>>, f64> = BTreeMap::new();
    for world in wscond::enumerate::enumerate_worlds(db, cap).unwrap() {
        let rows = world.instance.get(name).cloned().unwrap_or_default();
        *out.entry(rows).or_insert(0.0) += world.probability;
    }
    out
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol,
        "{what}: {a} vs {b} (|Δ| = {} > {tol})",
        (a - b).abs()
    );
}
