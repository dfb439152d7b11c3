use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hedcs::engine::Mode;
use hedcs_harness::bench::{scaling_bench, BenchEngine, BenchSpec};
use hedcs_harness::report::bounds_report;
use hedcs_harness::run::{engine_config, run_trace, RunConfig, RunOutput};
use hedcs_harness::trace::{generate_trace, Trace, TraceKind};

#[derive(Parser)]
#[command(name = "hedcs", version, about = "Dynamic approximate matching via hierarchical EDCS")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an update trace.
    Gen(GenArgs),
    /// Replay a trace, writing metrics.csv and summary.json.
    Run(RunArgs),
    /// Solve or export the factor-revealing LP and report the bounds.
    Bounds(BoundsArgs),
    /// Fit work per update against the degree bound.
    Bench(BenchArgs),
    /// Check a trace's legality and replay it with every check enabled.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "churn")]
    kind: TraceKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta: usize,
    /// Edge cap; defaults to n·delta/2.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    length: usize,
    /// Overridden by HEDCS_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 8)]
    beta: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Engine rank seed. Overridden by HEDCS_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "amortized")]
    mode: ModeArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Amortized,
    Deamortized,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Amortized => Mode::Amortized,
            ModeArg::Deamortized => Mode::Deamortized,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Trace file.
    trace: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Route updates through the degree-capping wrapper.
    #[arg(long)]
    sparsify: bool,
    /// ε for the wrapper's Δ′; defaults to --epsilon.
    #[arg(long)]
    sparsify_epsilon: Option<f64>,
    #[arg(long, default_value_t = 100)]
    check_every: u64,
    #[arg(long, default_value_t = 0)]
    oracle_every: u64,
    #[arg(long, default_value_t = 20)]
    mu_prime: usize,
    /// Check the HEDCS definition whenever rebuilt levels go live.
    #[arg(long)]
    verify_hedcs: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    beta: u32,
    #[arg(long)]
    beta_minus: u32,
    /// Write the LP in interchange format here.
    #[arg(long)]
    lp_out: Option<PathBuf>,
    /// JSON output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    beta: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
    deltas: Vec<usize>,
    /// Overridden by HEDCS_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vertex count; 0 means twice the largest delta.
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    density_divisor: usize,
    #[arg(long, default_value_t = 20_000)]
    updates: usize,
    #[arg(long, value_enum, default_value = "amortized")]
    mode: ModeArg,
    /// Use the constant-work stub instead of the engine.
    #[arg(long)]
    stub: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    trace: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = 1)]
    check_every: u64,
}

/// HEDCS_SEED wins over the flag when set.
fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var("HEDCS_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("HEDCS_SEED={s:?} is not an integer")),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(e).context("reading HEDCS_SEED"),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn load_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Trace::load(&text).with_context(|| format!("in {}", path.display()))
}

fn run_config(e: &EngineArgs) -> Result<RunConfig> {
    Ok(RunConfig::new(engine_config(e.k, e.beta, e.epsilon, e.mode.into()), effective_seed(e.seed)?))
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let m = a.m.unwrap_or(a.n * a.delta / 2);
    let trace = generate_trace(a.kind, a.n, a.delta, m, a.length, effective_seed(a.seed)?)?;
    let mut out = open_out(a.out.as_deref())?;
    trace.write(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let trace = load_trace(&a.trace)?;
    let mut cfg = run_config(&a.engine)?;
    cfg.check_every = a.check_every;
    cfg.oracle_every = a.oracle_every;
    cfg.mu_prime = a.mu_prime;
    cfg.verify_hedcs = a.verify_hedcs;
    if a.sparsify {
        cfg.sparsify = Some(a.sparsify_epsilon.unwrap_or(a.engine.epsilon));
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let csv_path = a.out.join("metrics.csv");
    let csv = BufWriter::new(File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?);
    let summary = run_trace(&trace, &cfg, csv)?;
    write_json(Some(&a.out.join("summary.json")), &RunOutput::new(&trace, &cfg, summary))
}

fn cmd_bounds(a: BoundsArgs) -> Result<()> {
    let report = bounds_report(a.k, a.beta, a.beta_minus, a.lp_out.as_deref())?;
    write_json(a.out.as_deref(), &report)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut spec = BenchSpec::new(a.k, a.beta, a.epsilon, a.deltas, effective_seed(a.seed)?);
    spec.n = a.n;
    spec.density_divisor = a.density_divisor;
    spec.updates = a.updates;
    spec.mode = a.mode.into();
    if a.stub {
        spec.engine = BenchEngine::ConstantStub;
    }
    let report = scaling_bench(&spec)?;
    write_json(a.out.as_deref(), &report)
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let trace = load_trace(&a.trace)?;
    let mut cfg = run_config(&a.engine)?;
    cfg.check_every = a.check_every;
    cfg.verify_hedcs = true;
    let summary = run_trace(&trace, &cfg, io::sink())?;
    if summary.add_layer.violations() > 0 {
        bail!("potential-method checks failed: {:?}", summary.add_layer);
    }
    println!(
        "ok: {} updates, {} invariant checks, {} HEDCS checks, {} add_layer calls",
        summary.updates, summary.invariant_checks, summary.hedcs_checks, summary.add_layer.calls
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
