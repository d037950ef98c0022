//! End-to-end tests of the command-line interface: file formats, output
//! shape, determinism and the exit-code contract (0 ok, 2 validation,
//! 3 resource cap/timeout, 4 unsatisfiable evidence).

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;
use wscond::enumerate::weighted_instances;
use wscond::model::WsSet;
use wscond::urel::ProbabilisticDatabase;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wscond"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn wscond")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_string)
        .collect()
}

fn write_five_var_fixture(dir: &Path) -> (String, String) {
    let w = five_var_table();
    let s = five_var_set(&w);
    let world = dir.join("world.csv");
    let wsset = dir.join("wsset.txt");
    let mut buf = Vec::new();
    w.to_csv(&mut buf).unwrap();
    fs::write(&world, buf).unwrap();
    fs::write(&wsset, s.to_text(&w)).unwrap();
    (
        world.to_string_lossy().into_owned(),
        wsset.to_string_lossy().into_owned(),
    )
}

fn write_ssn_db(dir: &Path) -> String {
    ssn_db().save_dir(dir).unwrap();
    dir.to_string_lossy().into_owned()
}

const FD_QUERY: &str = "(complement (project ()\n  (join (rel R) (rel R)\n    (and (= 1.SSN 2.SSN) (!= 1.NAME 2.NAME)))))";

#[test]
fn confidence_prints_twelve_digit_value() {
    let dir = tempfile::tempdir().unwrap();
    let (world, wsset) = write_five_var_fixture(dir.path());
    for algorithm in ["indve", "ve", "we", "brute"] {
        let out = run(&[
            "confidence",
            "--world",
            &world,
            "--wsset",
            &wsset,
            "--algorithm",
            algorithm,
        ]);
        assert!(out.status.success(), "{algorithm}: {out:?}");
        let lines = stdout_lines(&out);
        assert_eq!(lines[0], "0.757800000000", "{algorithm}");
        assert!(lines[1].contains(&format!("algorithm={algorithm}")));
        assert!(lines[1].contains("nodes="));
        assert!(lines[1].contains("time_ms="));
    }
    // both heuristics agree
    let out = run(&[
        "confidence",
        "--world",
        &world,
        "--wsset",
        &wsset,
        "--heuristic",
        "minmax",
    ]);
    assert_eq!(stdout_lines(&out)[0], "0.757800000000");
}

#[test]
fn confidence_kl_reports_iterations_and_rng() {
    let dir = tempfile::tempdir().unwrap();
    let (world, wsset) = write_five_var_fixture(dir.path());
    let out = run(&[
        "confidence",
        "--world",
        &world,
        "--wsset",
        &wsset,
        "--algorithm",
        "kl",
        "--epsilon",
        "0.05",
        "--delta",
        "0.05",
        "--seed",
        "7",
    ]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let value: f64 = lines[0].parse().unwrap();
    assert!((value - 0.7578).abs() < 0.05 * 0.7578);
    assert!(lines[1].contains("iterations="));
    assert!(lines[1].contains("rng=chacha12"));
    assert!(lines[1].contains("mode=adaptive"));
    // deterministic given the seed
    let again = run(&[
        "confidence",
        "--world",
        &world,
        "--wsset",
        &wsset,
        "--algorithm",
        "kl",
        "--epsilon",
        "0.05",
        "--delta",
        "0.05",
        "--seed",
        "7",
    ]);
    assert_eq!(stdout_lines(&again)[0], lines[0]);
    // fixed mode flag is honored
    let fixed = run(&[
        "confidence",
        "--world",
        &world,
        "--wsset",
        &wsset,
        "--algorithm",
        "kl",
        "--kl-fixed",
    ]);
    assert!(String::from_utf8_lossy(&fixed.stdout).contains("mode=fixed"));
}

#[test]
fn confidence_of_empty_wsset_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (world, _) = write_five_var_fixture(dir.path());
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = run(&[
        "confidence",
        "--world",
        &world,
        "--wsset",
        empty.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_lines(&out)[0], "0.000000000000");
}

#[test]
fn confidence_dump_tree() {
    let dir = tempfile::tempdir().unwrap();
    let (world, wsset) = write_five_var_fixture(dir.path());
    let out = run(&[
        "confidence",
        "--world",
        &world,
        "--wsset",
        &wsset,
        "--dump-tree",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("*\n"));
    assert!(text.contains("+x\n"));
    assert!(text.contains("x=1@0.1"));
}

#[test]
fn condition_writes_renormalized_database() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = dir.path().join("db");
    let db_path = write_ssn_db(&db_dir);
    let query = dir.path().join("fd.query");
    fs::write(&query, FD_QUERY).unwrap();
    let out_dir = dir.path().join("out");

    let out = run(&[
        "condition",
        "--db",
        &db_path,
        "--query",
        query.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout_lines(&out)[0], "0.440000000000");

    let conditioned = ProbabilisticDatabase::load_dir(&out_dir).unwrap();
    let instances = weighted_instances(&conditioned, 1 << 24).unwrap();
    assert_eq!(instances.len(), 3);
    let mut weights: Vec<f64> = instances.values().copied().collect();
    weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in weights.iter().zip([0.06 / 0.44, 0.14 / 0.44, 0.24 / 0.44]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn condition_with_tautology_keeps_semantics() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = dir.path().join("db");
    let db_path = write_ssn_db(&db_dir);
    let evidence = dir.path().join("all.txt");
    fs::write(&evidence, "{}\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "condition",
        "--db",
        &db_path,
        "--wsset",
        evidence.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_lines(&out)[0], "1.000000000000");
    let before = weighted_instances(&ssn_db(), 1 << 24).unwrap();
    let after =
        weighted_instances(&ProbabilisticDatabase::load_dir(&out_dir).unwrap(), 1 << 24).unwrap();
    assert_eq!(before.len(), after.len());
    for (instance, p) in &before {
        assert!((after[instance] - p).abs() < 1e-12);
    }
}

#[test]
fn conditioned_databases_can_be_conditioned_again() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = dir.path().join("db");
    let db_path = write_ssn_db(&db_dir);
    let query = dir.path().join("fd.query");
    fs::write(&query, FD_QUERY).unwrap();
    let once = dir.path().join("once");
    let out = run(&[
        "condition",
        "--db",
        &db_path,
        "--query",
        query.to_str().unwrap(),
        "--out",
        once.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // the written database (with primed fresh-variable names) loads and
    // conditions again on a new piece of evidence
    let bill4 = dir.path().join("bill4.query");
    fs::write(
        &bill4,
        "(project () (select (and (= SSN 4) (= NAME \"Bill\")) (rel R)))",
    )
    .unwrap();
    let twice = dir.path().join("twice");
    let out = run(&[
        "condition",
        "--db",
        once.to_str().unwrap(),
        "--query",
        bill4.to_str().unwrap(),
        "--out",
        twice.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    // P(Bill has 4 | FD) = 0.3/0.44
    let c: f64 = stdout_lines(&out)[0].parse().unwrap();
    assert!((c - 0.3 / 0.44).abs() < 1e-9);
    let final_db = ProbabilisticDatabase::load_dir(&twice).unwrap();
    let instances = weighted_instances(&final_db, 1 << 24).unwrap();
    // conditioning twice leaves the two FD worlds where Bill has SSN 4
    assert_eq!(instances.len(), 2);
    let total: f64 = instances.values().sum();
    assert!((total - 1.0).abs() < 1e-9);
    let mut weights: Vec<f64> = instances.values().copied().collect();
    weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in weights.iter().zip([0.06 / 0.3, 0.24 / 0.3]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn contradictory_evidence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = dir.path().join("db");
    let db_path = write_ssn_db(&db_dir);
    let query = dir.path().join("never.query");
    fs::write(&query, "(select false (rel R))").unwrap();
    let out = run(&[
        "condition",
        "--db",
        &db_path,
        "--query",
        query.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn validation_errors_exit_2() {
    let out = run(&[
        "confidence",
        "--world",
        "/nonexistent/world.csv",
        "--wsset",
        "/nonexistent/s.txt",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "var,value,prob\nx,1,0.9\n").unwrap(); // probabilities sum to 0.9
    let s = dir.path().join("s.txt");
    fs::write(&s, "{}\n").unwrap();
    let out = run(&[
        "confidence",
        "--world",
        bad.to_str().unwrap(),
        "--wsset",
        s.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn resource_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (world, wsset) = write_five_var_fixture(dir.path());
    let out = bin()
        .args(["confidence", "--world", &world, "--wsset", &wsset])
        .env("WSCOND_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let result = run(&[
            "generate",
            "--n",
            "50",
            "--r",
            "2",
            "--s",
            "2",
            "--w",
            "100",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    assert_eq!(
        fs::read(out1.join("world.csv")).unwrap(),
        fs::read(out2.join("world.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out1.join("wsset.txt")).unwrap(),
        fs::read(out2.join("wsset.txt")).unwrap()
    );
    // the generated files round-trip through the parsers
    let world =
        wscond::model::WorldTable::from_csv(fs::File::open(out1.join("world.csv")).unwrap())
            .unwrap();
    let set = WsSet::parse(&fs::read_to_string(out1.join("wsset.txt")).unwrap(), &world).unwrap();
    assert_eq!(set.len(), 100);
}

#[test]
fn generate_tuple_independent_database() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ti");
    let result = run(&[
        "generate",
        "--kind",
        "tuple-independent",
        "--t",
        "4",
        "--columns",
        "id,k",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let db = ProbabilisticDatabase::load_dir(&out_dir).unwrap();
    assert_eq!(db.relation("R").unwrap().len(), 4);
    assert_eq!(
        wscond::enumerate::enumerate_worlds(&db, 1 << 24)
            .unwrap()
            .count(),
        16
    );
}

#[test]
fn bench_writes_declared_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "n = 8\nr = 2\ns = 2\nw = 4, 8\nalgorithms = indve, kl\nheuristics = minlog\nreps = 2\nseed = 3\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,r,s,w,algorithm,heuristic,rep,seed,value,nodes,time_ms,status")
    );
    assert_eq!(lines.clone().count(), 2 * 2 * 2);
    assert!(lines.all(|l| l.ends_with(",ok")));
}

#[test]
fn enumerate_lists_worlds_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let db_dir = dir.path().join("db");
    let db_path = write_ssn_db(&db_dir);
    let out = run(&["enumerate", "--db", &db_path]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "worlds=4");
    let probs: Vec<&str> = lines
        .iter()
        .filter(|l| l.starts_with('{'))
        .map(|l| l.split("p=").nth(1).unwrap())
        .collect();
    assert_eq!(
        probs,
        vec![
            "0.060000000000",
            "0.240000000000",
            "0.140000000000",
            "0.560000000000"
        ]
    );
    assert!(lines.iter().any(|l| l.contains("R: 1,John")));
}
