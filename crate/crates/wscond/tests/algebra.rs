//! Pushdown correctness of the relational algebra: evaluating an operator
//! on the descriptor-annotated representation must equal evaluating it
//! world by world. The per-world oracle below implements the operators
//! directly on materialized instances.

mod common;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use wscond::budget::Caps;
use wscond::enumerate::enumerate_worlds;
use wscond::query::{evidence_wsset, parse_evidence_query, CmpOp, Operand, Pred};
use wscond::urel::{ProbabilisticDatabase, URelation, Value};

type Rows = Vec<Vec<Value>>;

fn oracle_select(rows: &Rows, col: usize, bound: i64) -> Rows {
    rows.iter()
        .filter(|r| matches!(r[col], Value::Int(v) if v <= bound))
        .cloned()
        .collect()
}

fn oracle_project(rows: &Rows, cols: &[usize]) -> Rows {
    let mut out: Rows = rows
        .iter()
        .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
        .collect();
    out.sort();
    out.dedup();
    out
}

fn oracle_join(left: &Rows, right: &Rows) -> Rows {
    let mut out = Vec::new();
    for l in left {
        for r in right {
            let mut row = l.clone();
            row.extend(r.iter().cloned());
            out.push(row);
        }
    }
    out.sort();
    out.dedup();
    out
}

fn oracle_union(a: &Rows, b: &Rows) -> Rows {
    let mut out = a.clone();
    out.extend(b.iter().cloned());
    out.sort();
    out.dedup();
    out
}

fn oracle_difference(a: &Rows, b: &Rows) -> Rows {
    a.iter().filter(|r| !b.contains(r)).cloned().collect()
}

fn le_pred(col: &str, bound: i64) -> Pred {
    Pred::Cmp(
        Operand::Col(col.into()),
        CmpOp::Le,
        Operand::Lit(Value::Int(bound)),
    )
}

/// Two relations over one random world table, numeric columns only.
fn random_two_relation_db(rng: &mut StdRng) -> ProbabilisticDatabase {
    let w = random_world_table(rng, 6, 3, 1 << 10);
    let mut db = ProbabilisticDatabase::new(w);
    for (name, cols) in [("R", 2usize), ("S", 2)] {
        let columns: Vec<String> = (0..cols).map(|c| format!("{name}{c}")).collect();
        let mut rel = URelation::new(columns).unwrap();
        for _ in 0..rng.gen_range(1..=4) {
            let desc = random_descriptor(rng, db.world(), 2);
            let values: Vec<Value> = (0..cols).map(|_| Value::Int(rng.gen_range(0..3))).collect();
            rel.push(desc, values).unwrap();
        }
        db.insert_relation(name, rel).unwrap();
    }
    db
}

#[test]
fn operators_commute_with_world_materialization() {
    let mut rng = StdRng::seed_from_u64(0x5EED);
    for round in 0..120 {
        let mut db = random_two_relation_db(&mut rng);
        let bound = rng.gen_range(0..3);
        let r = db.relation("R").unwrap().clone();
        let s = db.relation("S").unwrap().clone();
        db.insert_relation("SEL", r.select(&le_pred("R0", bound)).unwrap())
            .unwrap();
        db.insert_relation("PRJ", r.project(&["R1"]).unwrap())
            .unwrap();
        let joined = r.join(&s, "l.", "r.", &le_pred("l.R0", bound)).unwrap();
        for row in joined.rows() {
            row.wsd.validate(db.world()).unwrap(); // functional by construction
        }
        db.insert_relation("JOIN", joined).unwrap();
        db.insert_relation("UNI", r.union(&r.project(&["R0", "R1"]).unwrap()).unwrap())
            .unwrap();
        db.insert_relation(
            "DIF",
            r.difference(
                &r.select(&le_pred("R1", bound)).unwrap(),
                db.world(),
                &Caps::default(),
            )
            .unwrap(),
        )
        .unwrap();

        for world in enumerate_worlds(&db, 1 << 24).unwrap() {
            let i = &world.instance;
            assert_eq!(
                i["SEL"],
                oracle_select(&i["R"], 0, bound),
                "select, round {round}"
            );
            assert_eq!(
                i["PRJ"],
                oracle_project(&i["R"], &[1]),
                "project, round {round}"
            );
            let expected_join = oracle_join(&oracle_select(&i["R"], 0, bound), &i["S"]);
            assert_eq!(i["JOIN"], expected_join, "join, round {round}");
            assert_eq!(
                i["UNI"],
                oracle_union(&i["R"], &i["R"]),
                "union, round {round}"
            );
            assert_eq!(
                i["DIF"],
                oracle_difference(&i["R"], &oracle_select(&i["R"], 1, bound)),
                "difference, round {round}"
            );
        }
    }
}

#[test]
fn evidence_queries_match_per_world_evaluation() {
    // the functional dependency example: complement of a self-join
    let db = ssn_db();
    let query = parse_evidence_query(
        "(complement (project ()\n  (join (rel R) (rel R)\n    (and (= 1.SSN 2.SSN) (!= 1.NAME 2.NAME)))))",
    )
    .unwrap();
    let evidence = evidence_wsset(&db, &query, &Caps::default()).unwrap();
    for world in enumerate_worlds(&db, 1 << 24).unwrap() {
        let rows = &world.instance["R"];
        // direct evaluation: does some pair share the SSN with distinct names?
        let violated = rows
            .iter()
            .any(|a| rows.iter().any(|b| a[0] == b[0] && a[1] != b[1]));
        let holds = !violated;
        assert_eq!(
            set_covers(&evidence, &world.valuation),
            holds,
            "world {:?}",
            world.valuation
        );
    }

    // positive selections, random bound
    let mut rng = StdRng::seed_from_u64(0xA11CE);
    for _ in 0..60 {
        let db = random_two_relation_db(&mut rng);
        let bound = rng.gen_range(0..3);
        let text = format!("(project () (select (<= R0 {bound}) (rel R)))");
        let query = parse_evidence_query(&text).unwrap();
        let evidence = evidence_wsset(&db, &query, &Caps::default()).unwrap();
        for world in enumerate_worlds(&db, 1 << 24).unwrap() {
            let holds = !oracle_select(&world.instance["R"], 0, bound).is_empty();
            assert_eq!(set_covers(&evidence, &world.valuation), holds);
        }
    }
}
