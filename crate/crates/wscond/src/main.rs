//! Command-line front door: confidence computation, conditioning,
//! instance generation, benchmarking and world enumeration over the file
//! formats of the library.
//!
//! Exit codes: 0 success, 2 validation/parse error, 3 resource cap or
//! timeout, 4 unsatisfiable evidence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use wscond::approx::{karp_luby_confidence, KlOptions, RNG_ALGORITHM};
use wscond::bench::{run_benchmark_with, write_csv, BenchConfig};
use wscond::budget::{Budget, Caps};
use wscond::condition::{assert_evidence, simplify};
use wscond::decompose::{compute_tree, confidence, dump_tree, Heuristic};
use wscond::enumerate::enumerate_worlds;
use wscond::error::{Error, Result};
use wscond::generator::{brute_force_probability, gen_hard_instance, gen_tuple_independent_db};
use wscond::model::{WorldTable, WsSet};
use wscond::query::{evidence_wsset, parse_evidence_query};
use wscond::urel::ProbabilisticDatabase;
use wscond::wselim::probability_by_elimination;

#[derive(Parser)]
#[command(
    name = "wscond",
    about = "Probabilistic database engine: exact confidence and conditioning over world-set descriptor sets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the confidence (probability) of a ws-set or evidence query.
    Confidence(ConfidenceArgs),
    /// Condition a database on evidence and write the renormalized result.
    Condition(ConditionArgs),
    /// Generate a synthetic instance deterministically from a seed.
    Generate(GenerateArgs),
    /// Run a benchmark sweep from a config file and write a CSV table.
    Bench(BenchArgs),
    /// List every possible world of a small database.
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Database directory (world.csv plus one CSV per relation).
    #[arg(long)]
    db: Option<PathBuf>,
    /// World table CSV (alternative to --db when no relations are needed).
    #[arg(long)]
    world: Option<PathBuf>,
    /// Ws-set file: one descriptor per line, e.g. `{x=1;y=2}`.
    #[arg(long)]
    wsset: Option<PathBuf>,
    /// Evidence query file (s-expression algebra; requires --db).
    #[arg(long)]
    query: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self, caps: &Caps) -> Result<(WorldTable, Option<ProbabilisticDatabase>, WsSet)> {
        let db = match &self.db {
            Some(dir) => Some(ProbabilisticDatabase::load_dir(dir)?),
            None => None,
        };
        let world = match (&db, &self.world) {
            (Some(db), None) => db.world().clone(),
            (None, Some(path)) => WorldTable::from_csv(fs::File::open(path)?)?,
            (Some(_), Some(_)) => {
                return Err(Error::Invalid(
                    "pass either --db or --world, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Invalid("need --db or --world".into())),
        };
        let set = match (&self.wsset, &self.query) {
            (Some(path), None) => WsSet::parse(&fs::read_to_string(path)?, &world)?,
            (None, Some(path)) => {
                let Some(db) = &db else {
                    return Err(Error::Invalid("--query needs --db".into()));
                };
                let query = parse_evidence_query(&fs::read_to_string(path)?)?;
                evidence_wsset(db, &query, caps)?
            }
            (Some(_), Some(_)) => {
                return Err(Error::Invalid(
                    "pass either --wsset or --query, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Invalid("need --wsset or --query".into())),
        };
        Ok((world, db, set))
    }
}

#[derive(Args)]
struct ConfidenceArgs {
    #[command(flatten)]
    input: InputArgs,
    /// indve | ve | we | kl | brute
    #[arg(long, default_value = "indve")]
    algorithm: String,
    /// minlog | minmax
    #[arg(long, default_value = "minlog")]
    heuristic: String,
    /// Relative error bound for kl.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability for kl.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the fixed Karp-Luby iteration bound instead of adaptive
    /// stopping.
    #[arg(long)]
    kl_fixed: bool,
    /// Worker threads for parallelizable phases.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Print the decomposition tree before the value.
    #[arg(long)]
    dump_tree: bool,
}

#[derive(Args)]
struct ConditionArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory for the conditioned database.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "minlog")]
    heuristic: String,
    /// Skip the world-table simplification pass.
    #[arg(long)]
    no_simplify: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// hard (world + ws-set) | tuple-independent (database directory)
    #[arg(long, default_value = "hard")]
    kind: String,
    #[arg(long, default_value_t = 50)]
    n: u64,
    #[arg(long, default_value_t = 2)]
    r: u64,
    #[arg(long, default_value_t = 2)]
    s: u64,
    #[arg(long, default_value_t = 100)]
    w: u64,
    /// Tuple count for tuple-independent databases.
    #[arg(long, default_value_t = 10)]
    t: u64,
    /// Column names for tuple-independent databases.
    #[arg(long, default_value = "id")]
    columns: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep configuration file (key = value).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    db: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let caps = Caps::from_env();
    match run(cli, &caps) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn run(cli: Cli, caps: &Caps) -> Result<()> {
    match cli.command {
        Command::Confidence(args) => cmd_confidence(args, caps),
        Command::Condition(args) => cmd_condition(args, caps),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args, caps),
        Command::Enumerate(args) => cmd_enumerate(args, caps),
    }
}

/// Engine recursion depth tracks the variable count, so big instances run
/// on a thread with a large stack.
fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(512 << 20)
            .spawn_scoped(scope, f)
            .expect("spawn worker")
            .join()
            .expect("worker panicked")
    })
}

fn cmd_confidence(args: ConfidenceArgs, caps: &Caps) -> Result<()> {
    let (world, _db, set) = args.input.load(caps)?;
    let set = set.normalize(&world)?;
    let heuristic: Heuristic = args.heuristic.parse()?;
    let mut budget = Budget::from_caps(caps);
    if args.dump_tree {
        let tree = compute_tree(&set, &world, heuristic, &mut budget)?;
        print!("{}", dump_tree(&tree, &world));
        budget = Budget::from_caps(caps);
    }
    let algorithm = args.algorithm.as_str();
    let mut extra = String::new();
    let value = with_big_stack(|| -> Result<f64> {
        match algorithm {
            "indve" => confidence(&set, &world, heuristic, true, &mut budget),
            "ve" => confidence(&set, &world, heuristic, false, &mut budget),
            "we" => probability_by_elimination(&set, &world, &mut budget),
            "brute" => brute_force_probability(&set, &world, caps.enumerate_worlds),
            "kl" => {
                let opts = KlOptions {
                    epsilon: args.epsilon,
                    delta: args.delta,
                    seed: args.seed,
                    fixed: args.kl_fixed,
                    threads: args.threads,
                };
                let out = karp_luby_confidence(&set, &world, &opts, &mut budget)?;
                extra = format!(
                    " iterations={} rng={RNG_ALGORITHM} mode={}",
                    out.iterations,
                    if args.kl_fixed { "fixed" } else { "adaptive" }
                );
                Ok(out.estimate)
            }
            other => Err(Error::Invalid(format!("unknown algorithm {other:?}"))),
        }
    })?;
    println!("{value:.12}");
    println!(
        "algorithm={algorithm} heuristic={} nodes={} time_ms={:.3}{extra}",
        heuristic,
        budget.nodes(),
        budget.elapsed().as_secs_f64() * 1e3
    );
    Ok(())
}

fn cmd_condition(args: ConditionArgs, caps: &Caps) -> Result<()> {
    let (_, db, evidence) = args.input.load(caps)?;
    let Some(db) = db else {
        return Err(Error::Invalid("condition needs --db".into()));
    };
    let heuristic: Heuristic = args.heuristic.parse()?;
    let mut budget = Budget::from_caps(caps);
    let result = with_big_stack(|| assert_evidence(&db, &evidence, heuristic, &mut budget))?;
    let conditioned = if args.no_simplify {
        result.database
    } else {
        simplify(&result.database)?
    };
    conditioned.save_dir(&args.out)?;
    println!("{:.12}", result.confidence);
    println!(
        "nodes={} time_ms={:.3} fresh_variables={} out={}",
        budget.nodes(),
        budget.elapsed().as_secs_f64() * 1e3,
        result.fresh.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    match args.kind.as_str() {
        "hard" => {
            let (table, set) = gen_hard_instance(args.n, args.r, args.s, args.w, args.seed)?;
            write_world(&args.out, &table)?;
            fs::write(args.out.join("wsset.txt"), set.to_text(&table))?;
            println!(
                "wrote world.csv and wsset.txt ({} variables, {} descriptors) to {}",
                table.num_vars(),
                set.len(),
                args.out.display()
            );
        }
        "tuple-independent" => {
            let columns: Vec<&str> = args.columns.split(',').map(str::trim).collect();
            let db = gen_tuple_independent_db(args.t, &columns, args.seed)?;
            db.save_dir(&args.out)?;
            println!(
                "wrote tuple-independent database ({} tuples) to {}",
                args.t,
                args.out.display()
            );
        }
        other => return Err(Error::Invalid(format!("unknown kind {other:?}"))),
    }
    Ok(())
}

fn write_world(dir: &Path, table: &WorldTable) -> Result<()> {
    let mut buf = Vec::new();
    table.to_csv(&mut buf)?;
    fs::write(dir.join("world.csv"), buf)?;
    Ok(())
}

fn cmd_bench(args: BenchArgs, caps: &Caps) -> Result<()> {
    let cfg = BenchConfig::parse(&fs::read_to_string(&args.config)?)?;
    let rows = with_big_stack(|| {
        run_benchmark_with(&cfg, caps, |row| {
            eprintln!(
                "n={} r={} s={} w={} {} {} rep={} -> {} ({:.1} ms)",
                row.n,
                row.r,
                row.s,
                row.w,
                row.algorithm,
                row.heuristic,
                row.rep,
                row.status,
                row.time_ms
            );
        })
    })?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    fs::write(&args.out, buf)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_enumerate(args: EnumerateArgs, caps: &Caps) -> Result<()> {
    let db = ProbabilisticDatabase::load_dir(&args.db)?;
    let worlds: Vec<_> = enumerate_worlds(&db, caps.enumerate_worlds)?.collect();
    println!("worlds={}", worlds.len());
    for world in &worlds {
        let desc: Vec<String> = db
            .world()
            .var_ids()
            .zip(&world.valuation)
            .map(|(v, &c)| {
                format!(
                    "{}={}",
                    db.world().var_name(v),
                    db.world().value_label(v, c)
                )
            })
            .collect();
        println!("{{{}}} p={:.12}", desc.join(";"), world.probability);
        for (name, rows) in &world.instance {
            for row in rows {
                let values: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                println!("  {name}: {}", values.join(","));
            }
        }
    }
    Ok(())
}
