//! Bisection sampling: repeatedly halve the current box along axes
//! `1..d` in turn, keeping each half with probability given by the sigmoid
//! of the difference of the halves' log-partitions, then draw uniformly
//! inside the final box.

use rand::RngCore;

use super::{PointSampler, SamplerOutcome};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::numeric::{int_pow, sigmoid};
use crate::rect::Hyperrectangle;
use crate::rng::{stream, uniform, Stream};
use crate::target::{Rescaled, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub evals: u64,
}

/// Estimates the log-partition of a rescaled function `f_Z`.
pub trait LogPartitionOracle: Send + Sync {
    fn log_partition(&self, fz: &Rescaled<'_>, rng: &mut dyn RngCore) -> Result<OracleValue>;
}

/// The target's own closed-form box log-partition; costs nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactOracle;

impl LogPartitionOracle for ExactOracle {
    fn log_partition(&self, fz: &Rescaled<'_>, _rng: &mut dyn RngCore) -> Result<OracleValue> {
        let value = fz
            .exact_log_partition()
            .ok_or(Error::MissingOracle("box log-partition"))?;
        Ok(OracleValue { value, evals: 0 })
    }
}

/// Runs a log-partition estimator with a fixed budget on every call.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorOracle {
    pub estimator: Estimator,
    pub budget: u64,
}

impl LogPartitionOracle for EstimatorOracle {
    fn log_partition(&self, fz: &Rescaled<'_>, rng: &mut dyn RngCore) -> Result<OracleValue> {
        use crate::estimators::{
            mc_log_partition, pc_log_partition, pc_mc_log_partition, thermodynamic_integration,
            ExactScaledSampler,
        };
        let est = match self.estimator {
            Estimator::Mc => mc_log_partition(fz, self.budget, rng)?,
            Estimator::Pc => pc_log_partition(fz, self.budget)?,
            Estimator::PcMc => pc_mc_log_partition(fz, self.budget, rng)?,
            Estimator::Ti => {
                thermodynamic_integration(fz, &ExactScaledSampler::new(fz), self.budget, rng)?
            }
        };
        Ok(OracleValue {
            value: est.value,
            evals: est.evals_used,
        })
    }
}

/// Adds `±ε` to an inner oracle with sign `(−1)^{Σ_j k_j}`, where `k_j` is
/// the dyadic index of the box along axis `j`. Two halves of a split always
/// receive opposite signs, so each split probability is off by the full
/// `2ε` in log-odds.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedOracle<O> {
    pub inner: O,
    pub eps: f64,
}

impl<O: LogPartitionOracle> LogPartitionOracle for PerturbedOracle<O> {
    fn log_partition(&self, fz: &Rescaled<'_>, rng: &mut dyn RngCore) -> Result<OracleValue> {
        let mut out = self.inner.log_partition(fz, rng)?;
        let rect = fz.rect();
        let parity: u64 = rect
            .lower()
            .iter()
            .zip(rect.size())
            .map(|(l, h)| (l / h).round() as u64)
            .sum();
        out.value += if parity.is_multiple_of(2) {
            self.eps
        } else {
            -self.eps
        };
        Ok(out)
    }
}

/// `σ(L₁ − L₂)`: probability of keeping the first half.
pub fn split_probability(l1: f64, l2: f64) -> f64 {
    sigmoid(l1 - l2)
}

fn split(
    f: &dyn TargetFunction,
    rect: &Hyperrectangle,
    axis: usize,
    oracle: &dyn LogPartitionOracle,
    rng: &mut dyn RngCore,
) -> Result<(Hyperrectangle, Hyperrectangle, f64, u64)> {
    let (first, second) = rect.bisect(axis);
    let a = oracle.log_partition(&Rescaled::new(f, first.clone()), rng)?;
    let b = oracle.log_partition(&Rescaled::new(f, second.clone()), rng)?;
    Ok((
        first,
        second,
        split_probability(a.value, b.value),
        a.evals + b.evals,
    ))
}

/// `rounds` rounds of splits along every axis, then a uniform draw inside
/// the final box. Uses `2 · rounds · d` oracle calls.
pub fn bisection_sampling<R: RngCore>(
    f: &dyn TargetFunction,
    oracle: &dyn LogPartitionOracle,
    rounds: u32,
    rng: &mut R,
) -> Result<SamplerOutcome> {
    let d = f.dim();
    let mut rect = Hyperrectangle::unit(d);
    let mut evals = 0;
    for _ in 0..rounds {
        for axis in 0..d {
            let (first, second, p1, used) = split(f, &rect, axis, oracle, rng)?;
            evals += used;
            rect = if uniform(rng) < p1 { first } else { second };
        }
    }
    let u: Vec<f64> = (0..d).map(|_| uniform(rng)).collect();
    let mut x = vec![0.0; d];
    rect.map_into(&u, &mut x);
    Ok(SamplerOutcome::plain(x, evals))
}

/// Probability that [`bisection_sampling`] ends in each of the `2^{rounds·d}`
/// final boxes, for a deterministic oracle. Boxes are listed in the order of
/// their flat row-major dyadic index.
pub fn bisection_cell_law(
    f: &dyn TargetFunction,
    oracle: &dyn LogPartitionOracle,
    rounds: u32,
) -> Result<Vec<(Hyperrectangle, f64)>> {
    let d = f.dim();
    let depth = rounds as usize * d;
    if depth > 24 {
        return Err(Error::InvalidArgument(format!(
            "{depth} splits is too deep to enumerate"
        )));
    }
    let mut rng = stream(0);
    let mut frontier = vec![(Hyperrectangle::unit(d), 1.0)];
    for _ in 0..rounds {
        for axis in 0..d {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for (rect, p) in frontier {
                let (first, second, p1, _) = split(f, &rect, axis, oracle, &mut rng)?;
                next.push((first, p * p1));
                next.push((second, p * (1.0 - p1)));
            }
            frontier = next;
        }
    }
    let cells_per_axis = 1usize << rounds;
    let index = |r: &Hyperrectangle| {
        r.lower().iter().fold(0usize, |acc, l| {
            acc * cells_per_axis + (l * cells_per_axis as f64).round() as usize
        })
    };
    frontier.sort_by_key(|(r, _)| index(r));
    Ok(frontier)
}

/// Bisection with piecewise-constant oracle calls, sized from a budget.
pub(crate) struct PcBisectionSampler<'a> {
    f: &'a dyn TargetFunction,
    oracle: EstimatorOracle,
    rounds: u32,
}

impl<'a> PcBisectionSampler<'a> {
    /// Largest `K` with `2 ⌈log₂ K⌉ d K^d ≤ n`; `M = ⌈log₂ K⌉` rounds with
    /// `K^d` evaluations per oracle call.
    pub(crate) fn new(f: &'a dyn TargetFunction, n: u64) -> Result<Self> {
        let d = f.dim();
        let rounds_for = |k: u64| 64 - (k - 1).leading_zeros() as u64;
        let cost = |k: u64| 2 * rounds_for(k) * d as u64 * int_pow(k, d);
        let mut k = 1u64;
        while cost(k + 1) <= n {
            k += 1;
        }
        Ok(Self {
            f,
            oracle: EstimatorOracle {
                estimator: Estimator::Pc,
                budget: int_pow(k, d),
            },
            rounds: rounds_for(k) as u32,
        })
    }
}

impl PointSampler for PcBisectionSampler<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        bisection_sampling(self.f, &self.oracle, self.rounds, rng)
    }
}
