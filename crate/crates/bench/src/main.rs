use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibbs_bench::spec::{ExperimentSpec, Mode, DEFAULT_REFERENCE_SAMPLES, DEFAULT_REPS};
use gibbs_bench::{emit_csv, run_sweep, selftest, with_pool, BudgetGrid};
use gibbs_core::metrics::Metric;
use gibbs_core::FunctionId;

const EXIT_AUDIT: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "gibbs-bench",
    version,
    about = "Budgeted Gibbs sampling and log-partition benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Log-partition estimates and their errors against the oracle.
    Logpartition(SweepArgs),
    /// Sample batches scored by distribution metrics.
    Sample(SampleArgs),
    /// Log-partition runs with wall-clock timing recorded.
    Bench(SweepArgs),
    /// Runs the invariant self-test suite.
    Selftest,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated algorithm ids.
    #[arg(long = "algo", value_delimiter = ',', required = true)]
    algorithms: Vec<String>,
    /// Function id; repeat the flag for several functions.
    #[arg(long = "fn", required = true)]
    functions: Vec<FunctionId>,
    /// Budget grid, e.g. `1e3:1e6:log8` or `16,64,256`.
    #[arg(long = "n")]
    budgets: BudgetGrid,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Record wall-clock time per run (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Worker threads (default: GIBBS_BENCH_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Comma-separated metric ids.
    #[arg(long = "metric", value_delimiter = ',', default_value = "energy2")]
    metrics: Vec<Metric>,
    #[arg(long = "ref-samples", default_value_t = DEFAULT_REFERENCE_SAMPLES)]
    reference_samples: usize,
}

fn sweep(mode: Mode, args: SweepArgs, metrics: Vec<Metric>, reference_samples: usize) -> ExitCode {
    let spec = ExperimentSpec::new(
        mode,
        &args.algorithms,
        args.functions,
        args.budgets,
        args.reps,
        args.seed,
        metrics,
        reference_samples,
    );
    let mut spec = match spec {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    spec.timing |= args.timing;
    let out = with_pool(args.threads, || run_sweep(&spec));
    if let Err(e) = emit_csv(&out.records, &args.out) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return ExitCode::from(EXIT_AUDIT);
    }
    let failed = out.records.iter().filter(|r| r.is_failure()).count();
    eprintln!(
        "wrote {} records to {} ({failed} failed runs)",
        out.records.len(),
        args.out.display()
    );
    if out.audit_failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &out.audit_failures {
            eprintln!("audit failure: {f}");
        }
        ExitCode::from(EXIT_AUDIT)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Logpartition(args) => sweep(Mode::LogPartition, args, Vec::new(), 0),
        Command::Bench(args) => sweep(Mode::Bench, args, Vec::new(), 0),
        Command::Sample(args) => sweep(
            Mode::Sample,
            args.sweep,
            args.metrics,
            args.reference_samples,
        ),
        Command::Selftest => {
            let outcomes = selftest::run_selftest();
            for o in &outcomes {
                println!(
                    "[{}] {}: {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
            }
            if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_AUDIT)
            }
        }
    }
}
