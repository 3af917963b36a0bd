//! Experiment harness: budget grids, seeded sweeps over algorithms,
//! functions and budgets, CSV output, and the self-test suite.

pub mod ngrid;
pub mod record;
pub mod selftest;
pub mod spec;
pub mod sweep;

pub use ngrid::BudgetGrid;
pub use record::{emit_csv, read_csv, write_csv, RunRecord};
pub use spec::{ExperimentSpec, Mode};
pub use sweep::{run_logpartition_sweep, run_sampling_sweep, run_sweep, SweepOutput};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "GIBBS_BENCH_THREADS";

/// Runs `job` on a pool of `threads` workers, or on a pool capped by
/// `GIBBS_BENCH_THREADS` when `threads` is `None`.
pub fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    let cap = threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cap {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}
