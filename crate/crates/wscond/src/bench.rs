//! Benchmark harness: sweep generated instances over a parameter grid and
//! algorithm list, with a per-cell timeout, and emit one CSV row per
//! repetition. Timeouts are recorded as censored rows, not failures.

use std::fmt;
use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;

use crate::approx::{karp_luby_confidence, KlOptions};
use crate::budget::{Budget, Caps};
use crate::decompose::{confidence, Heuristic};
use crate::error::{Error, Result};
use crate::generator::{brute_force_probability, gen_hard_instance};
use crate::wselim::probability_by_elimination;

/// CSV header of the result table.
pub const CSV_HEADER: &str = "n,r,s,w,algorithm,heuristic,rep,seed,value,nodes,time_ms,status";

/// Worlds threshold under which an exact run is cross-checked against the
/// brute-force engine.
const AGREEMENT_WORLDS: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Independent partitioning plus variable elimination.
    IndVe,
    /// Variable elimination only.
    Ve,
    /// Ws-descriptor elimination.
    We,
    /// Karp-Luby Monte Carlo approximation.
    Kl,
    /// Brute-force world enumeration.
    Brute,
}

impl Algorithm {
    pub fn uses_heuristic(self) -> bool {
        matches!(self, Algorithm::IndVe | Algorithm::Ve)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::IndVe => "indve",
            Algorithm::Ve => "ve",
            Algorithm::We => "we",
            Algorithm::Kl => "kl",
            Algorithm::Brute => "brute",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Algorithm> {
        match s {
            "indve" => Ok(Algorithm::IndVe),
            "ve" => Ok(Algorithm::Ve),
            "we" => Ok(Algorithm::We),
            "kl" => Ok(Algorithm::Kl),
            "brute" => Ok(Algorithm::Brute),
            other => Err(Error::Invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Sweep configuration, parsed from a `key = value` text file.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: Vec<u64>,
    pub r: Vec<u64>,
    pub s: Vec<u64>,
    pub w: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub heuristics: Vec<Heuristic>,
    pub reps: u32,
    pub timeout_s: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    /// Run cells in parallel (correctness-only sweeps; timings of
    /// concurrent cells disturb each other).
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: Vec::new(),
            r: Vec::new(),
            s: Vec::new(),
            w: Vec::new(),
            algorithms: vec![Algorithm::IndVe],
            heuristics: vec![Heuristic::MinLog],
            reps: 1,
            timeout_s: 600.0,
            seed: 0,
            epsilon: 0.1,
            delta: 0.1,
            parallel: false,
        }
    }
}

impl BenchConfig {
    /// Parse the `key = value` format; `#` starts a comment, list values
    /// are comma-separated. Keys: n, r, s, w, algorithms, heuristics,
    /// reps, timeout_s, seed, epsilon, delta, parallel.
    pub fn parse(text: &str) -> Result<BenchConfig> {
        let mut cfg = BenchConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| Error::Parse(format!("line {}: {e}", lineno + 1));
            match key {
                "n" => cfg.n = parse_list(value).map_err(bad)?,
                "r" => cfg.r = parse_list(value).map_err(bad)?,
                "s" => cfg.s = parse_list(value).map_err(bad)?,
                "w" => cfg.w = parse_list(value).map_err(bad)?,
                "algorithms" => {
                    cfg.algorithms = value
                        .split(',')
                        .map(|a| a.trim().parse())
                        .collect::<Result<_>>()?;
                }
                "heuristics" => {
                    cfg.heuristics = value
                        .split(',')
                        .map(|h| h.trim().parse())
                        .collect::<Result<_>>()?;
                }
                "reps" => cfg.reps = value.parse().map_err(|e| bad(format!("{e}")))?,
                "timeout_s" => cfg.timeout_s = value.parse().map_err(|e| bad(format!("{e}")))?,
                "seed" => cfg.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
                "epsilon" => cfg.epsilon = value.parse().map_err(|e| bad(format!("{e}")))?,
                "delta" => cfg.delta = value.parse().map_err(|e| bad(format!("{e}")))?,
                "parallel" => cfg.parallel = value.parse().map_err(|e| bad(format!("{e}")))?,
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        if cfg.n.is_empty() || cfg.r.is_empty() || cfg.s.is_empty() || cfg.w.is_empty() {
            return Err(Error::Parse("config must list n, r, s and w".into()));
        }
        if cfg.reps == 0 {
            return Err(Error::Parse("reps must be at least 1".into()));
        }
        Ok(cfg)
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<u64>, String> {
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|e| format!("{e}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Timeout,
    Cap,
    /// Exact value disagreed with the brute-force cross-check.
    Mismatch,
    /// Instance generation failed (e.g. w above capacity).
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Ok => "ok",
            Status::Timeout => "timeout",
            Status::Cap => "cap",
            Status::Mismatch => "mismatch",
            Status::Skipped => "skipped",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: u64,
    pub r: u64,
    pub s: u64,
    pub w: u64,
    pub algorithm: Algorithm,
    /// Heuristic name, or `-` for algorithms that take none.
    pub heuristic: String,
    pub rep: u32,
    pub seed: u64,
    pub value: Option<f64>,
    /// Visited subproblems, streamed descriptors, or Monte Carlo
    /// iterations, depending on the algorithm.
    pub nodes: u64,
    pub time_ms: f64,
    pub status: Status,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn cell_seed(base: u64, n: u64, r: u64, s: u64, w: u64, rep: u32) -> u64 {
    let mut acc = splitmix(base);
    for v in [n, r, s, w, rep as u64] {
        acc = splitmix(acc ^ splitmix(v));
    }
    acc
}

struct Cell {
    n: u64,
    r: u64,
    s: u64,
    w: u64,
    algorithm: Algorithm,
    heuristic: Option<Heuristic>,
    rep: u32,
    seed: u64,
}

fn run_cell(cell: &Cell, cfg: &BenchConfig, caps: &Caps) -> BenchRow {
    let mut row = BenchRow {
        n: cell.n,
        r: cell.r,
        s: cell.s,
        w: cell.w,
        algorithm: cell.algorithm,
        heuristic: cell
            .heuristic
            .map(|h| h.to_string())
            .unwrap_or_else(|| "-".to_string()),
        rep: cell.rep,
        seed: cell.seed,
        value: None,
        nodes: 0,
        time_ms: 0.0,
        status: Status::Ok,
    };
    let (table, set) = match gen_hard_instance(cell.n, cell.r, cell.s, cell.w, cell.seed) {
        Ok(instance) => instance,
        Err(_) => {
            row.status = Status::Skipped;
            return row;
        }
    };
    let mut budget = Budget::from_caps(caps).with_timeout(Duration::from_secs_f64(cfg.timeout_s));
    let outcome = match cell.algorithm {
        Algorithm::IndVe => confidence(&set, &table, cell.heuristic.unwrap(), true, &mut budget),
        Algorithm::Ve => confidence(&set, &table, cell.heuristic.unwrap(), false, &mut budget),
        Algorithm::We => probability_by_elimination(&set, &table, &mut budget),
        Algorithm::Kl => {
            let opts = KlOptions::new(cfg.epsilon, cfg.delta, cell.seed);
            karp_luby_confidence(&set, &table, &opts, &mut budget).map(|out| {
                row.nodes = out.iterations;
                out.estimate
            })
        }
        Algorithm::Brute => brute_force_probability(&set, &table, caps.enumerate_worlds),
    };
    row.time_ms = budget.elapsed().as_secs_f64() * 1e3;
    if !matches!(cell.algorithm, Algorithm::Kl) {
        row.nodes = budget.nodes();
    }
    match outcome {
        Ok(value) => {
            row.value = Some(value);
            // cross-check exact engines against brute force when feasible
            let feasible = table.world_count().is_some_and(|c| c <= AGREEMENT_WORLDS);
            if feasible && !matches!(cell.algorithm, Algorithm::Kl | Algorithm::Brute) {
                if let Ok(reference) = brute_force_probability(&set, &table, caps.enumerate_worlds)
                {
                    if (value - reference).abs() > 1e-9 {
                        row.status = Status::Mismatch;
                    }
                }
            }
        }
        Err(Error::Timeout { .. }) => row.status = Status::Timeout,
        Err(Error::ResourceExhausted { .. }) => row.status = Status::Cap,
        Err(_) => row.status = Status::Skipped,
    }
    row
}

/// Run the sweep: one row per (n, r, s, w, algorithm, heuristic, rep).
/// Cells run sequentially unless `parallel` is set; the instance of a
/// given cell and rep is identical across algorithms.
pub fn run_benchmark(cfg: &BenchConfig, caps: &Caps) -> Result<Vec<BenchRow>> {
    run_benchmark_with(cfg, caps, |_| {})
}

/// Like [`run_benchmark`], invoking `progress` after each finished row.
pub fn run_benchmark_with<F>(
    cfg: &BenchConfig,
    caps: &Caps,
    mut progress: F,
) -> Result<Vec<BenchRow>>
where
    F: FnMut(&BenchRow),
{
    let mut cells = Vec::new();
    for &n in &cfg.n {
        for &r in &cfg.r {
            for &s in &cfg.s {
                for &w in &cfg.w {
                    for &algorithm in &cfg.algorithms {
                        let heuristics: Vec<Option<Heuristic>> = if algorithm.uses_heuristic() {
                            cfg.heuristics.iter().map(|&h| Some(h)).collect()
                        } else {
                            vec![None]
                        };
                        for heuristic in heuristics {
                            for rep in 0..cfg.reps {
                                cells.push(Cell {
                                    n,
                                    r,
                                    s,
                                    w,
                                    algorithm,
                                    heuristic,
                                    rep,
                                    seed: cell_seed(cfg.seed, n, r, s, w, rep),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    if cfg.parallel {
        Ok(cells
            .par_iter()
            .map(|cell| run_cell(cell, cfg, caps))
            .collect())
    } else {
        let mut rows = Vec::with_capacity(cells.len());
        for cell in &cells {
            let row = run_cell(cell, cfg, caps);
            progress(&row);
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Write rows as CSV with the declared header.
pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let value = row.value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.3},{}",
            row.n,
            row.r,
            row.s,
            row.w,
            row.algorithm,
            row.heuristic,
            row.rep,
            row.seed,
            value,
            row.nodes,
            row.time_ms,
            row.status
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two cells, all exact engines
n = 12
r = 2
s = 2
w = 6, 12
algorithms = indve, ve, we, brute
heuristics = minlog, minmax
reps = 2
timeout_s = 30
seed = 99
";

    #[test]
    fn config_parses() {
        let cfg = BenchConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.n, vec![12]);
        assert_eq!(cfg.w, vec![6, 12]);
        assert_eq!(cfg.algorithms.len(), 4);
        assert_eq!(cfg.heuristics.len(), 2);
        assert_eq!(cfg.reps, 2);
        assert_eq!(cfg.timeout_s, 30.0);
        assert!(!cfg.parallel);
    }

    #[test]
    fn config_rejects_garbage() {
        assert!(BenchConfig::parse("nonsense").is_err());
        assert!(BenchConfig::parse("frob = 1").is_err());
        assert!(BenchConfig::parse("n = 1").is_err());
        assert!(BenchConfig::parse("n=1\nr=2\ns=1\nw=1\nreps=0").is_err());
    }

    #[test]
    fn sweep_produces_expected_rows_and_engines_agree() {
        let cfg = BenchConfig::parse(SAMPLE).unwrap();
        let rows = run_benchmark(&cfg, &Caps::default()).unwrap();
        // 2 w-values × (indve,ve with 2 heuristics each + we + brute) × 2 reps
        assert_eq!(rows.len(), 2 * (2 * 2 + 1 + 1) * 2);
        for row in &rows {
            assert_eq!(row.status, Status::Ok, "{row:?}");
            assert!(row.value.is_some());
        }
        // identical instance per (cell, rep): exact values agree across engines
        for w in [6u64, 12] {
            for rep in 0..2u32 {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.w == w && r.rep == rep)
                    .map(|r| r.value.unwrap())
                    .collect();
                for pair in values.windows(2) {
                    assert!((pair[0] - pair[1]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn timeouts_are_censored_rows() {
        let cfg = BenchConfig::parse(
            "n = 100\nr = 2\ns = 2\nw = 300\nalgorithms = indve\ntimeout_s = 0.0\nseed = 5",
        )
        .unwrap();
        let rows = run_benchmark(&cfg, &Caps::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, Status::Timeout);
        assert!(rows[0].value.is_none());
    }

    #[test]
    fn csv_format() {
        let cfg = BenchConfig::parse("n=4\nr=2\ns=2\nw=2\nalgorithms=indve,kl\nseed=1").unwrap();
        let rows = run_benchmark(&cfg, &Caps::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), rows.len());
        assert!(text.contains(",indve,minlog,"));
        assert!(text.contains(",kl,-,"));
    }

    #[test]
    fn parallel_mode_matches_sequential_values() {
        let mut cfg =
            BenchConfig::parse("n=8\nr=2\ns=2\nw=4,8\nalgorithms=indve,we\nseed=3").unwrap();
        let sequential = run_benchmark(&cfg, &Caps::default()).unwrap();
        cfg.parallel = true;
        let parallel = run_benchmark(&cfg, &Caps::default()).unwrap();
        assert_eq!(sequential.len(), parallel.len());
        for (a, b) in sequential.iter().zip(&parallel) {
            assert_eq!(a.value, b.value);
            assert_eq!(a.seed, b.seed);
        }
    }
}
