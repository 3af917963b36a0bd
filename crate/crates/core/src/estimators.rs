//! Log-partition estimators under an evaluation budget.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::budget::EvalBudget;
use crate::error::{Error, Result, UnknownIdError};
use crate::grid::GridApproximation;
use crate::numeric::{int_pow, integer_root, CompensatedSum, LogSumExpAcc};
use crate::rng::{stream, uniform};
use crate::target::TargetFunction;

/// Points drawn and evaluated per batch by the Monte Carlo loops.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPartitionEstimate {
    pub value: f64,
    pub evals_used: u64,
    /// Seed of the stream that produced the estimate, when run by seed.
    pub seed: Option<u64>,
    pub algorithm: Estimator,
}

/// Monte Carlo: `log((1/n) Σ e^{f(X_i)})` with `X_i` uniform.
pub fn mc_log_partition<R: Rng + ?Sized>(
    f: &dyn TargetFunction,
    n: u64,
    rng: &mut R,
) -> Result<LogPartitionEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("mc needs n >= 1".into()));
    }
    let mut budget = EvalBudget::new(n);
    let d = f.dim();
    let mut points = vec![0.0; CHUNK * d];
    let mut values = vec![0.0; CHUNK];
    let mut acc = LogSumExpAcc::new();
    let mut left = n;
    while left > 0 {
        let m = left.min(CHUNK as u64) as usize;
        budget.reserve(m as u64)?;
        let pts = &mut points[..m * d];
        for p in pts.iter_mut() {
            *p = uniform(rng);
        }
        f.evaluate_batch(pts, &mut values[..m]);
        acc.add_slice(&values[..m]);
        left -= m as u64;
    }
    Ok(LogPartitionEstimate {
        value: acc.log_mean(),
        evals_used: budget.used(),
        seed: None,
        algorithm: Estimator::Mc,
    })
}

/// Cells per axis used by the piecewise-constant estimator for budget `n`.
pub fn pc_cells_per_axis(n: u64, d: usize) -> u64 {
    integer_root(n, d)
}

/// Piecewise-constant: `L_g` of the grid with `⌊n^{1/d}⌋` cells per axis.
pub fn pc_log_partition(f: &dyn TargetFunction, n: u64) -> Result<LogPartitionEstimate> {
    let cells = pc_cells_per_axis(n, f.dim());
    if cells == 0 {
        return Err(Error::InvalidArgument("pc needs n >= 1".into()));
    }
    let mut budget = EvalBudget::new(n);
    let grid = GridApproximation::build(f, cells as usize, &mut budget)?;
    Ok(LogPartitionEstimate {
        value: grid.log_partition(),
        evals_used: budget.used(),
        seed: None,
        algorithm: Estimator::Pc,
    })
}

/// Grid size of the hybrid estimators: `⌊(⌊n/2⌋)^{1/d}⌋` cells per axis.
pub fn hybrid_cells_per_axis(n: u64, d: usize) -> u64 {
    integer_root(n / 2, d)
}

/// Importance sampling on top of the grid model:
/// `L_g + log((1/M) Σ e^{f(X_j) − g(X_j)})` with `X_j ~ P_g`, spending
/// `N^d` evaluations on the grid and the remaining `M = n − N^d` on `f(X_j)`.
pub fn pc_mc_log_partition<R: Rng + ?Sized>(
    f: &dyn TargetFunction,
    n: u64,
    rng: &mut R,
) -> Result<LogPartitionEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument("pc+mc needs n >= 2".into()));
    }
    let d = f.dim();
    let mut budget = EvalBudget::new(n);
    let grid = GridApproximation::build(f, hybrid_cells_per_axis(n, d) as usize, &mut budget)?;
    let m = budget.remaining();
    let mut points = vec![0.0; CHUNK * d];
    let mut cells = vec![0usize; CHUNK];
    let mut values = vec![0.0; CHUNK];
    let mut acc = LogSumExpAcc::new();
    let mut left = m;
    while left > 0 {
        let k = left.min(CHUNK as u64) as usize;
        budget.reserve(k as u64)?;
        for (p, c) in points[..k * d].chunks_exact_mut(d).zip(&mut cells[..k]) {
            *c = grid.sample_with_cell(rng, p);
        }
        f.evaluate_batch(&points[..k * d], &mut values[..k]);
        for (v, &c) in values[..k].iter_mut().zip(&cells[..k]) {
            *v -= grid.values()[c];
        }
        acc.add_slice(&values[..k]);
        left -= k as u64;
    }
    Ok(LogPartitionEstimate {
        value: grid.log_partition() + acc.log_mean(),
        evals_used: budget.used(),
        seed: None,
        algorithm: Estimator::PcMc,
    })
}

/// Source of samples from `P_{β f}` for any `β ∈ [0, 1]`.
pub trait ScaledSampler {
    /// Writes one sample from `P_{scale · f}` into `out`, returning the
    /// number of evaluations of `f` it spent.
    fn sample(&self, scale: f64, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<u64>;
}

impl<F> ScaledSampler for F
where
    F: Fn(f64, &mut dyn RngCore, &mut [f64]) -> Result<u64>,
{
    fn sample(&self, scale: f64, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<u64> {
        self(scale, rng, out)
    }
}

/// The target's own exact sampler, which costs no evaluations.
pub struct ExactScaledSampler<'a> {
    f: &'a dyn TargetFunction,
}

impl<'a> ExactScaledSampler<'a> {
    pub fn new(f: &'a dyn TargetFunction) -> Self {
        Self { f }
    }
}

impl ScaledSampler for ExactScaledSampler<'_> {
    fn sample(&self, scale: f64, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<u64> {
        if self.f.sample_scaled(scale, rng, out) {
            Ok(0)
        } else {
            Err(Error::MissingOracle("exact sampler"))
        }
    }
}

/// Thermodynamic integration: `(1/N) Σ f(X_i)` with `β_i ~ U[0,1]` and
/// `X_i ~ P_{β_i f}`. Uses `N` evaluations plus whatever the sampler spends.
pub fn thermodynamic_integration<R: RngCore + ?Sized>(
    f: &dyn TargetFunction,
    sampler: &dyn ScaledSampler,
    temperatures: u64,
    rng: &mut R,
) -> Result<LogPartitionEstimate> {
    if temperatures == 0 {
        return Err(Error::InvalidArgument("ti needs N >= 1".into()));
    }
    let mut x = vec![0.0; f.dim()];
    // Deviations from the first value are summed, so constants come out exact.
    let mut first = None;
    let mut deviations = CompensatedSum::new();
    let mut evals = 0u64;
    for _ in 0..temperatures {
        let beta = uniform(rng);
        let mut sized = &mut *rng;
        evals += sampler.sample(beta, &mut sized, &mut x)?;
        let v = f.evaluate(&x);
        evals += 1;
        deviations.add(v - *first.get_or_insert(v));
    }
    let first = first.expect("at least one temperature");
    Ok(LogPartitionEstimate {
        value: first + deviations.value() / temperatures as f64,
        evals_used: evals,
        seed: None,
        algorithm: Estimator::Ti,
    })
}

/// Which branch of the Monte Carlo error bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Optimization,
    Quadrature,
}

impl Regime {
    pub fn id(self) -> &'static str {
        match self {
            Regime::Optimization => "optimization",
            Regime::Quadrature => "quadrature",
        }
    }
}

/// High-probability bound on `|L̃_n − L_f|` for the Monte Carlo estimator,
/// holding with probability at least `1 − δ`.
///
/// With `c = 1 + 3 d^{-1/2} |f|_1`: when `n ≥ 4 log(2/δ) c^d` the quadrature
/// bound `4 (log(2/δ))^{1/2} c^{d/2} n^{-1/2}` applies, otherwise the
/// optimization bound `d^{1/2} (log(1/δ))^{1/d} |f|_1 n^{-1/d}
/// + log(4 log(2/δ)) + d log c`.
pub fn mc_log_partition_bound(delta: f64, lipschitz: f64, d: usize, n: u64) -> (Regime, f64) {
    let df = d as f64;
    let nf = n as f64;
    let c = 1.0 + 3.0 * lipschitz / df.sqrt();
    let l2 = (2.0 / delta).ln();
    let threshold = 4.0 * l2 * c.powf(df);
    if nf >= threshold {
        let bound = 4.0 * l2.sqrt() * c.powf(df / 2.0) / nf.sqrt();
        (Regime::Quadrature, bound)
    } else {
        let bound = df.sqrt() * (1.0 / delta).ln().powf(1.0 / df) * lipschitz * nf.powf(-1.0 / df)
            + (4.0 * l2).ln()
            + df * c.ln();
        (Regime::Optimization, bound)
    }
}

/// Estimator ids accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Mc,
    Pc,
    PcMc,
    Ti,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Mc, Estimator::Pc, Estimator::PcMc, Estimator::Ti];

    pub fn id(self) -> &'static str {
        match self {
            Estimator::Mc => "mc",
            Estimator::Pc => "pc",
            Estimator::PcMc => "pc+mc",
            Estimator::Ti => "ti",
        }
    }

    /// Whether the output depends on the random stream.
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Estimator::Pc)
    }

    /// Exact evaluation count for budget `n` in dimension `d`.
    pub fn evals_for(self, n: u64, d: usize) -> u64 {
        match self {
            Estimator::Pc => int_pow(pc_cells_per_axis(n, d), d),
            Estimator::Mc | Estimator::PcMc | Estimator::Ti => n,
        }
    }

    /// Runs the estimator with budget `n` on a stream seeded by `seed`.
    /// Thermodynamic integration uses `N = n` temperatures and the target's
    /// exact scaled sampler.
    pub fn run(self, f: &dyn TargetFunction, n: u64, seed: u64) -> Result<LogPartitionEstimate> {
        let mut rng = stream(seed);
        let mut est = match self {
            Estimator::Mc => mc_log_partition(f, n, &mut rng),
            Estimator::Pc => pc_log_partition(f, n),
            Estimator::PcMc => pc_mc_log_partition(f, n, &mut rng),
            Estimator::Ti => thermodynamic_integration(f, &ExactScaledSampler::new(f), n, &mut rng),
        }?;
        est.seed = Some(seed);
        Ok(est)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Estimator {
    type Err = UnknownIdError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| UnknownIdError {
                registry: "estimator",
                id: s.to_string(),
            })
    }
}
