//! `depfdr`: multiple testing under a p-value dependency graph.
//!
//! Exit codes: 0 success, 1 failed checks or internal error, 2 invalid
//! input, 3 component size guard exceeded.

mod oracle_check;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depfdr::bounds::{bound_summary, CliqueCover};
use depfdr::engine::{self, EngineConfig};
use depfdr::graph::{DependencyGraph, DEFAULT_GUARD, DEFAULT_MAX_SETS};
use depfdr::io::{parse_blocks, parse_graph, parse_pvalues};
use depfdr::procedures::{bh, Procedure, ProcedureSpec};
use depfdr::simgen::{
    compute_metrics, parse_scenario, rep_rng, run_simulation, write_metrics_csv, Scenario,
};
use depfdr::{harmonic, Level, PValues, RejectionSet};

#[derive(Parser)]
#[command(
    name = "depfdr",
    version,
    about = "FDR control under a known p-value dependency graph"
)]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a procedure on a p-value file.
    Reject(RejectArgs),
    /// Monte Carlo metrics for a scenario file, as CSV.
    Simulate(SimulateArgs),
    /// Worst-case FDR bounds and adjusted levels for a graph.
    Bounds(BoundsArgs),
    /// Cross-check the fast engine against the reference and brute force.
    OracleCheck(oracle_check::OracleCheckArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Edge list, one `i<TAB>j` pair of 1-based ids per line.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Consecutive cliques of this size.
    #[arg(long, value_name = "SIZE")]
    block: Option<usize>,
    /// Edges between ids closer than half this bandwidth.
    #[arg(long, value_name = "BANDWIDTH")]
    banded: Option<usize>,
    #[arg(long)]
    empty: bool,
    #[arg(long)]
    complete: bool,
}

impl GraphSource {
    fn build(&self, m: usize) -> anyhow::Result<DependencyGraph> {
        Ok(if let Some(path) = &self.graph {
            parse_graph(&read_input(path)?, m).with_context(|| format!("in {}", path.display()))?
        } else if let Some(b) = self.block {
            DependencyGraph::blocks(m, b)?
        } else if let Some(b) = self.banded {
            DependencyGraph::banded(m, b)?
        } else if self.empty {
            DependencyGraph::empty(m)
        } else {
            DependencyGraph::complete(m)
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args)]
struct RejectArgs {
    /// One p-value per line, or `id<TAB>value`.
    #[arg(long, value_name = "FILE")]
    pvalues: PathBuf,
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// bh, sdbh, bonf, by, ebh, naive, indbh, indbh2, indbh3, indbhk=K, su or randprune.
    #[arg(long, default_value = "indbh")]
    method: String,
    /// Seed for randprune.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest non-clique component for independent-set enumeration.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: usize,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Allow the naive procedure, which does not control the FDR.
    #[arg(long)]
    unsafe_demo: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Comma-separated method names.
    #[arg(long, default_value = "bh,by,indbh,indbh3")]
    methods: String,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: usize,
    /// Also recompute every IndBH-family result with the reference recursion.
    #[arg(long)]
    oracle_check: bool,
    #[arg(long)]
    unsafe_demo: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// Number of hypotheses.
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Clique cover, one block of 1-based ids per line. Defaults to the
    /// block partition or a greedy cover.
    #[arg(long, value_name = "FILE")]
    cover: Option<PathBuf>,
}

/// Failure to read or interpret user input.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn read_input(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())).into())
}

fn parse_method(
    name: &str,
    alpha: f64,
    seed: u64,
    unsafe_demo: bool,
) -> anyhow::Result<ProcedureSpec> {
    let mut kind: Procedure = name.parse()?;
    if let Procedure::RandPruned { seed: s, .. } = &mut kind {
        *s = seed;
    }
    match kind {
        Procedure::Naive if !unsafe_demo => {
            return Err(InputError(
                "naive does not control the FDR; pass --unsafe-demo to run it anyway".into(),
            )
            .into())
        }
        Procedure::Naive => eprintln!("warning: naive has no FDR guarantee"),
        Procedure::Su => {
            eprintln!("warning: su uses the exponential reference computation and may be slow")
        }
        Procedure::Ebh if alpha > 0.5 => {
            bail!(InputError(format!("ebh needs alpha <= 0.5, got {alpha}")))
        }
        _ => {}
    }
    Ok(ProcedureSpec::new(kind, alpha)?)
}

fn engine_config(guard: usize) -> EngineConfig {
    EngineConfig {
        guard,
        max_sets: DEFAULT_MAX_SETS,
        threads: None,
    }
}

/// The level at which each rejected hypothesis was compared, where the
/// procedure has one.
fn local_thresholds(
    spec: &ProcedureSpec,
    p: &PValues,
    g: &DependencyGraph,
    r: &RejectionSet,
    cfg: &EngineConfig,
) -> anyhow::Result<Vec<Option<f64>>> {
    let m = p.len();
    let level = Level::new(spec.alpha, m);
    let uniform = |t: f64| Ok(vec![Some(t); r.len()]);
    match spec.kind {
        Procedure::Bh | Procedure::StepDownBh => uniform(level.threshold(r.len())),
        Procedure::Bonferroni => uniform(level.threshold(1)),
        Procedure::By => uniform(Level::new(spec.alpha / harmonic(m), m).threshold(r.len())),
        Procedure::IndBh => {
            let rp = engine::reduce_to_bh(p, spec.alpha, g)?;
            let t = engine::precompute_table(&rp, cfg)?;
            Ok(r.iter()
                .map(|i| {
                    let j = rp.to_reduced(i).expect("rejections lie in the BH set");
                    Some(level.threshold(engine::beta_exact(&rp, &t, &[], j)))
                })
                .collect())
        }
        _ => Ok(vec![None; r.len()]),
    }
}

fn cmd_reject(a: &RejectArgs) -> anyhow::Result<u8> {
    let spec = parse_method(&a.method, a.alpha, a.seed, a.unsafe_demo)?;
    let text = read_input(&a.pvalues)?;
    let p = parse_pvalues(&text).with_context(|| format!("in {}", a.pvalues.display()))?;
    let g = a.source.build(p.len())?;
    let cfg = engine_config(a.guard);
    let start = Instant::now();
    let r = spec.run(&p, Some(&g), &cfg)?;
    let elapsed = start.elapsed();
    let thresholds = local_thresholds(&spec, &p, &g, &r, &cfg)?;
    let n_bh = bh(&p, a.alpha).len();

    let mut out = io::stdout().lock();
    match a.format {
        Format::Tsv => {
            writeln!(out, "id\tp\tthreshold")?;
            for (i, t) in r.iter().zip(&thresholds) {
                let t = t.map_or_else(|| "NA".to_string(), |t| t.to_string());
                writeln!(out, "{}\t{}\t{t}", i + 1, p[i])?;
            }
            writeln!(out, "# m={}\tbh={n_bh}\trejected={}", p.len(), r.len())?;
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = r
                .iter()
                .zip(&thresholds)
                .map(|(i, t)| serde_json::json!({ "id": i + 1, "p": p[i], "threshold": t }))
                .collect();
            let doc = serde_json::json!({
                "method": spec.kind.to_string(),
                "alpha": a.alpha,
                "m": p.len(),
                "bh": n_bh,
                "rejected": r.len(),
                "rejections": rows,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    eprintln!("wall time {:.3} ms", elapsed.as_secs_f64() * 1e3);
    Ok(0)
}

fn cmd_simulate(a: &SimulateArgs) -> anyhow::Result<u8> {
    if a.reps == 0 {
        bail!(InputError("--reps must be at least 1".into()));
    }
    let text = read_input(&a.config)?;
    let config = parse_scenario(&text).with_context(|| format!("in {}", a.config.display()))?;
    let methods = a
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_method(s, config.alpha, a.seed, a.unsafe_demo))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if methods.is_empty() {
        bail!(InputError("--methods is empty".into()));
    }
    let sc = config.build(a.seed)?;
    let cfg = engine_config(a.guard);
    let runs = run_simulation(&sc, &methods, config.alpha, a.reps, a.seed, &cfg)?;
    if a.oracle_check {
        let mismatches = oracle_check::check_runs(&sc, &methods, &runs, a.seed)?;
        if mismatches > 0 {
            eprintln!("oracle check: {mismatches} mismatching replications");
            return Ok(1);
        }
        eprintln!("oracle check: all {} replications agree", a.reps);
    }
    let names: Vec<String> = methods.iter().map(|s| s.kind.to_string()).collect();
    write_metrics_csv(
        &mut io::stdout().lock(),
        &names,
        sc.m(),
        &compute_metrics(&runs),
    )?;
    Ok(0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.10}"))
}

fn cmd_bounds(a: &BoundsArgs) -> anyhow::Result<u8> {
    Level::validate(a.alpha)?;
    let g = a.source.build(a.m)?;
    let cover = match &a.cover {
        Some(path) => {
            let blocks = parse_blocks(&read_input(path)?, a.m)
                .with_context(|| format!("in {}", path.display()))?;
            CliqueCover::new(a.m, blocks, Some(&g))?
        }
        None => CliqueCover::for_graph(&g),
    };
    let b = bound_summary(&g, a.alpha, &cover)?;
    let mut out = io::stdout().lock();
    writeln!(out, "m\t{}", b.m)?;
    writeln!(out, "edges\t{}", b.edges)?;
    writeln!(out, "max_degree\t{}", b.max_degree)?;
    writeln!(out, "cover_blocks\t{}", cover.blocks().len())?;
    writeln!(out, "alpha\t{}", b.alpha)?;
    writeln!(out, "fdr_lower\t{}", fmt_opt(b.lower))?;
    writeln!(out, "fdr_upper\t{}", fmt_opt(Some(b.upper)))?;
    writeln!(out, "by_level\t{}", fmt_opt(Some(b.by_level)))?;
    writeln!(out, "bygraph_level\t{}", fmt_opt(b.bygraph_level))?;
    Ok(0)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<depfdr::Error>() {
        Some(depfdr::Error::GuardExceeded { .. } | depfdr::Error::TooManySets { .. }) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn describe(e: &anyhow::Error) -> String {
    match e.downcast_ref::<depfdr::Error>() {
        Some(depfdr::Error::GuardExceeded { component, size, limit }) => format!(
            "component {} has {size} nodes, above the guard of {limit}; raise --guard to enumerate it",
            component + 1
        ),
        Some(depfdr::Error::TooManySets { component, limit }) => {
            format!("component {} has more than {limit} maximal independent sets", component + 1)
        }
        _ => format!("{e:#}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    let result = match &cli.command {
        Command::Reject(a) => cmd_reject(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::OracleCheck(a) => oracle_check::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Draws replication `rep` again; `run_simulation` uses the same streams.
fn redraw<S: Scenario + ?Sized>(sc: &S, seed: u64, rep: usize) -> anyhow::Result<PValues> {
    Ok(sc.draw(&mut rep_rng(seed, rep as u64))?.p)
}
