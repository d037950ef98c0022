//! Shared fixtures and brute-force oracles for unit tests.
//!
//! The oracles here enumerate total valuations directly with a mixed-radix
//! counter and never call into the engine under test.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::Rng;

use crate::model::{WorldTable, WsDescriptor, WsSet};

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

/// Five-variable table used by the decomposition examples:
/// x in {1,2,3} (.1/.4/.5), y in {1,2} (.2/.8), z in {1,2} (.4/.6),
/// u in {1,2} (.7/.3), v in {1,2} (.5/.5).
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

/// The five-descriptor ws-set that pairs with [`five_var_table`]; its
/// exact probability is 0.7578.
pub fn five_var_set(w: &WorldTable) -> WsSet {
    WsSet::from_descriptors([
        d(w, "{x=1}"),
        d(w, "{x=2;y=1}"),
        d(w, "{x=2;z=1}"),
        d(w, "{u=1;v=1}"),
        d(w, "{u=2}"),
    ])
}

/// All total valuations (codes indexed by variable id, first variable
/// cycling fastest) with their probabilities.
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

/// The set of worlds a ws-set denotes, as plain valuation vectors.
pub fn omega_set(s: &WsSet, w: &WorldTable) -> BTreeSet<Vec<u32>> {
    all_valuations(w)
        .into_iter()
        .filter(|(val, _)| s.iter().any(|desc| covers(desc, val)))
        .map(|(val, _)| val)
        .collect()
}

/// Brute-force probability of a ws-set by full enumeration (compensated
/// sum, so the oracle is good to the last few ulps).
pub fn brute_prob(s: &WsSet, w: &WorldTable) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for (val, p) in all_valuations(w) {
        if s.iter().any(|desc| covers(desc, &val)) {
            let t = sum + p;
            compensation += if sum.abs() >= p.abs() {
                (sum - t) + p
            } else {
                (p - t) + sum
            };
            sum = t;
        }
    }
    sum + compensation
}

/// Random world table with at most `max_vars` variables whose total world
/// count stays under 2^16; probabilities are random and normalized.
pub fn random_world_table(rng: &mut StdRng, max_vars: usize, max_dom: usize) -> WorldTable {
    let mut w = WorldTable::new();
    let vars = rng.gen_range(1..=max_vars);
    let mut worlds = 1u64;
    for i in 0..vars {
        let mut dom = rng.gen_range(2..=max_dom);
        while worlds.saturating_mul(dom as u64) > 1 << 16 && dom > 2 {
            dom -= 1;
        }
        if worlds.saturating_mul(dom as u64) > 1 << 16 {
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

/// Random ws-set over `w` with up to `max_len` assignments per descriptor.
pub fn random_wsset(
    rng: &mut StdRng,
    w: &WorldTable,
    max_descriptors: usize,
    max_len: usize,
) -> WsSet {
    let count = rng.gen_range(0..=max_descriptors);
    let mut descriptors = Vec::new();
    for _ in 0..count {
        descriptors.push(random_descriptor(rng, w, max_len));
    }
    WsSet::from_descriptors(descriptors)
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
        let var = crate::model::VariableId(id);
        let code = rng.gen_range(0..w.domain_size(var)) as u32;
        crate::model::Assignment::new(var, code)
    });
    WsDescriptor::from_assignments(assignments).unwrap()
}
