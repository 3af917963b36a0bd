//! Samplers for `P_f` under an evaluation budget.
//!
//! The free functions draw one sample each. The prepared samplers
//! ([`PointSampler`]) share setup work, such as a grid model, across many
//! draws; their per-draw `evals_used` still reports the full cost of one
//! independent run including the shared setup.

mod bisection;
mod rejection;
mod softmax;

pub use bisection::{
    bisection_cell_law, bisection_sampling, split_probability, EstimatorOracle, ExactOracle,
    LogPartitionOracle, OracleValue, PerturbedOracle,
};
pub use rejection::{
    exact_sampler_known_z, rejection_sampling, uniform_rejection_sampling, GridEnvelope,
    PcRsSampler, Proposal, ResidualBound, UniformEnvelope, UniformRejectionSampler,
    KNOWN_Z_SUP_NORM,
};
pub use softmax::{mc_sampling, McSampler, PcMcSampler, PcSampler};

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, UnknownIdError};
use crate::rng::Stream;
use crate::target::{Shifted, TargetFunction};

/// One sample together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutcome {
    pub point: Vec<f64>,
    /// 1-based round at which a rejection sampler accepted.
    pub accepted_at: Option<u64>,
    pub evals_used: u64,
    /// Set when a rejection sampler exhausted its rounds and returned a
    /// draw from the proposal instead.
    pub fell_back: bool,
}

impl SamplerOutcome {
    pub(crate) fn plain(point: Vec<f64>, evals_used: u64) -> Self {
        Self {
            point,
            accepted_at: None,
            evals_used,
            fell_back: false,
        }
    }
}

/// A sampler configured for one target and budget, drawn from repeatedly.
pub trait PointSampler: Send + Sync {
    fn dim(&self) -> usize;

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome>;

    /// Evaluations spent once at preparation and reused by every draw.
    fn shared_evals(&self) -> u64 {
        0
    }

    /// Evaluations made during setup to certify a bound, outside the
    /// sampling budget.
    fn auxiliary_evals(&self) -> u64 {
        0
    }
}

/// Sampler ids accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    Pc,
    Mc,
    Rs,
    PcMc,
    PcRs,
    Bisect,
    ExactZ,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        SamplerKind::Pc,
        SamplerKind::Mc,
        SamplerKind::Rs,
        SamplerKind::PcMc,
        SamplerKind::PcRs,
        SamplerKind::Bisect,
        SamplerKind::ExactZ,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SamplerKind::Pc => "pc",
            SamplerKind::Mc => "mc",
            SamplerKind::Rs => "rs",
            SamplerKind::PcMc => "pc+mc",
            SamplerKind::PcRs => "pc+rs",
            SamplerKind::Bisect => "bisect",
            SamplerKind::ExactZ => "exactZ",
        }
    }

    /// Configures the sampler for target `f` and per-sample budget `n`.
    ///
    /// `bisect` uses piecewise-constant oracle calls: the largest `K` with
    /// `2 M d K^d ≤ n` cells per call and `M = ⌈log₂ K⌉` rounds. `exactZ`
    /// first normalizes `f` with its exact log-partition.
    pub fn prepare<'a>(
        self,
        f: &'a dyn TargetFunction,
        n: u64,
    ) -> Result<Box<dyn PointSampler + 'a>> {
        Ok(match self {
            SamplerKind::Pc => Box::new(PcSampler::new(f, n)?),
            SamplerKind::Mc => Box::new(McSampler::new(f, n)?),
            SamplerKind::Rs => Box::new(UniformRejectionSampler::new(f, n)?),
            SamplerKind::PcMc => Box::new(PcMcSampler::new(f, n)?),
            SamplerKind::PcRs => Box::new(PcRsSampler::new(f, n)?),
            SamplerKind::Bisect => Box::new(bisection::PcBisectionSampler::new(f, n)?),
            SamplerKind::ExactZ => Box::new(KnownZSampler::new(f)?),
        })
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SamplerKind {
    type Err = UnknownIdError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| UnknownIdError {
                registry: "sampler",
                id: s.to_string(),
            })
    }
}

/// [`exact_sampler_known_z`] applied to `f − L_f`.
struct KnownZSampler<'a> {
    normalized: Shifted<&'a dyn TargetFunction>,
}

impl<'a> KnownZSampler<'a> {
    fn new(f: &'a dyn TargetFunction) -> Result<Self> {
        let l = f
            .exact_log_partition()
            .ok_or(crate::error::Error::MissingOracle("exact log-partition"))?;
        let normalized = Shifted::new(f, -l);
        rejection::check_known_z_range(&normalized)?;
        Ok(Self { normalized })
    }
}

impl PointSampler for KnownZSampler<'_> {
    fn dim(&self) -> usize {
        self.normalized.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        exact_sampler_known_z(&self.normalized, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for k in SamplerKind::ALL {
            assert_eq!(k.id().parse::<SamplerKind>().unwrap(), k);
        }
        assert!("exactz".parse::<SamplerKind>().is_err());
    }
}
