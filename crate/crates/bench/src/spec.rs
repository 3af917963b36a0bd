//! Experiment descriptions and their validation.

use std::fmt;
use std::str::FromStr;

use gibbs_core::error::UnknownIdError;
use gibbs_core::estimators::Estimator;
use gibbs_core::metrics::Metric;
use gibbs_core::samplers::SamplerKind;
use gibbs_core::FunctionId;
use thiserror::Error;

use crate::ngrid::BudgetGrid;

/// Default reference batch size for sample mode.
pub const DEFAULT_REFERENCE_SAMPLES: usize = 100_000;

/// Default number of repetitions.
pub const DEFAULT_REPS: u64 = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Log-partition estimates against the oracle.
    LogPartition,
    /// Sample batches scored by distribution metrics.
    Sample,
    /// Log-partition runs with wall-clock timing recorded.
    Bench,
}

impl Mode {
    pub fn id(self) -> &'static str {
        match self {
            Mode::LogPartition => "logpartition",
            Mode::Sample => "sample",
            Mode::Bench => "bench",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Mode {
    type Err = UnknownIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Mode::LogPartition, Mode::Sample, Mode::Bench]
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| UnknownIdError {
                registry: "mode",
                id: s.to_owned(),
            })
    }
}

/// Algorithms of one mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Algorithms {
    Estimators(Vec<Estimator>),
    Samplers(Vec<SamplerKind>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error(transparent)]
    UnknownId(#[from] UnknownIdError),
    #[error("no {0} given")]
    Missing(&'static str),
    #[error("repetitions must be at least 1")]
    NoReps,
    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("metric `{0}` is not available in sample mode (use energy2 or tv)")]
    MetricNotForSamples(Metric),
    #[error("metrics are only used in sample mode")]
    MetricsOutsideSampleMode,
    #[error("reference sample size must be at least 1")]
    NoReferenceSamples,
    #[error("function `{0}` has no exact sampler for reference batches")]
    NoReferenceSampler(String),
}

/// A complete, validated sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub algorithms: Algorithms,
    pub functions: Vec<FunctionId>,
    pub budgets: BudgetGrid,
    pub reps: u64,
    pub base_seed: u64,
    pub metrics: Vec<Metric>,
    pub reference_samples: usize,
    /// Record wall-clock nanoseconds per run (always on in bench mode).
    /// Off by default so that output files are reproducible byte for byte.
    pub timing: bool,
}

fn no_duplicates<T: PartialEq + fmt::Display>(
    kind: &'static str,
    items: &[T],
) -> Result<(), SpecError> {
    for (i, a) in items.iter().enumerate() {
        if items[..i].contains(a) {
            return Err(SpecError::Duplicate {
                kind,
                id: a.to_string(),
            });
        }
    }
    Ok(())
}

impl ExperimentSpec {
    /// Parses algorithm ids for `mode` and checks every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: Mode,
        algorithm_ids: &[String],
        functions: Vec<FunctionId>,
        budgets: BudgetGrid,
        reps: u64,
        base_seed: u64,
        metrics: Vec<Metric>,
        reference_samples: usize,
    ) -> Result<Self, SpecError> {
        let algorithms = match mode {
            Mode::LogPartition | Mode::Bench => Algorithms::Estimators(
                algorithm_ids
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()?,
            ),
            Mode::Sample => Algorithms::Samplers(
                algorithm_ids
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()?,
            ),
        };
        let spec = Self {
            mode,
            algorithms,
            functions,
            budgets,
            reps,
            base_seed,
            metrics,
            reference_samples,
            timing: mode == Mode::Bench,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        match &self.algorithms {
            Algorithms::Estimators(a) if a.is_empty() => {
                return Err(SpecError::Missing("algorithm"))
            }
            Algorithms::Samplers(a) if a.is_empty() => return Err(SpecError::Missing("algorithm")),
            Algorithms::Estimators(a) => no_duplicates("algorithm", a)?,
            Algorithms::Samplers(a) => no_duplicates("algorithm", a)?,
        }
        if self.functions.is_empty() {
            return Err(SpecError::Missing("function"));
        }
        no_duplicates("function", &self.functions)?;
        if self.reps == 0 {
            return Err(SpecError::NoReps);
        }
        no_duplicates("metric", &self.metrics)?;
        if self.mode == Mode::Sample {
            if self.metrics.is_empty() {
                return Err(SpecError::Missing("metric"));
            }
            if let Some(m) = self
                .metrics
                .iter()
                .find(|m| !matches!(m, Metric::Energy2 | Metric::Tv))
            {
                return Err(SpecError::MetricNotForSamples(*m));
            }
            if self.reference_samples == 0 {
                return Err(SpecError::NoReferenceSamples);
            }
            for id in &self.functions {
                if !id.build().has_exact_sampler(1.0) {
                    return Err(SpecError::NoReferenceSampler(id.to_string()));
                }
            }
        } else if !self.metrics.is_empty() {
            return Err(SpecError::MetricsOutsideSampleMode);
        }
        Ok(())
    }

    /// Algorithm ids in spec order.
    pub fn algorithm_ids(&self) -> Vec<&'static str> {
        match &self.algorithms {
            Algorithms::Estimators(a) => a.iter().map(|e| e.id()).collect(),
            Algorithms::Samplers(a) => a.iter().map(|s| s.id()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(s: &[&str]) -> Vec<String> {
        s.iter().map(|v| v.to_string()).collect()
    }

    fn linear() -> Vec<FunctionId> {
        vec!["linear:beta=1,d=1".parse().unwrap()]
    }

    #[test]
    fn validates_ids_and_invariants() {
        let grid: BudgetGrid = "10,20".parse().unwrap();
        let ok = ExperimentSpec::new(
            Mode::LogPartition,
            &ids(&["mc", "pc"]),
            linear(),
            grid.clone(),
            3,
            1,
            vec![],
            0,
        );
        assert!(ok.is_ok());
        let bad = ExperimentSpec::new(
            Mode::LogPartition,
            &ids(&["rs"]),
            linear(),
            grid.clone(),
            3,
            1,
            vec![],
            0,
        );
        assert!(matches!(bad, Err(SpecError::UnknownId(_))));
        let no_reps = ExperimentSpec::new(
            Mode::LogPartition,
            &ids(&["mc"]),
            linear(),
            grid.clone(),
            0,
            1,
            vec![],
            0,
        );
        assert_eq!(no_reps.unwrap_err(), SpecError::NoReps);
        let w1 = ExperimentSpec::new(
            Mode::Sample,
            &ids(&["rs"]),
            linear(),
            grid.clone(),
            1,
            1,
            vec![Metric::W1],
            10,
        );
        assert_eq!(w1.unwrap_err(), SpecError::MetricNotForSamples(Metric::W1));
        let quad = vec!["quad:beta=1,d=1".parse().unwrap()];
        let no_ref = ExperimentSpec::new(
            Mode::Sample,
            &ids(&["rs"]),
            quad,
            grid.clone(),
            1,
            1,
            vec![Metric::Energy2],
            10,
        );
        assert!(matches!(no_ref, Err(SpecError::NoReferenceSampler(_))));
        let dup = ExperimentSpec::new(
            Mode::LogPartition,
            &ids(&["mc", "mc"]),
            linear(),
            grid,
            1,
            1,
            vec![],
            0,
        );
        assert!(matches!(dup, Err(SpecError::Duplicate { .. })));
    }
}
