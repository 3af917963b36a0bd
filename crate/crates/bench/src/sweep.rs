//! Seeded repetition sweeps.
//!
//! Work fans out over the current rayon pool, but every random stream is
//! derived from the spec alone and records are sorted before output, so the
//! result does not depend on the number of threads.

use std::time::Instant;

use gibbs_core::estimators::{Estimator, LogPartitionEstimate};
use gibbs_core::grid::{cell_midpoint, GridApproximation};
use gibbs_core::metrics::{cell_histogram_tv, EmpiricalBatch, EnergyReference, Metric};
use gibbs_core::quadrature;
use gibbs_core::rng::{derive_seed, stream, tag_hash};
use gibbs_core::samplers::{PointSampler, SamplerKind};
use gibbs_core::target::Counting;
use gibbs_core::{Error, FunctionId, Hyperrectangle, Result, TargetFunction};
use rayon::prelude::*;

use crate::record::{RunRecord, CEILING_ALGORITHM, LOG_PARTITION_METRIC};
use crate::spec::{Algorithms, ExperimentSpec};

/// Samples drawn per independently seeded block of a batch.
pub const SAMPLE_BLOCK: usize = 4096;

/// Number of exact-vs-exact comparisons behind the self-distance ceiling.
pub const CEILING_DRAWS: u64 = 3;

/// Largest dimension for which the quadrature oracle is used when a
/// function has no closed form.
const QUADRATURE_MAX_DIM: usize = 3;

/// Records of a sweep together with any evaluation-accounting violations.
#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub audit_failures: Vec<String>,
}

impl SweepOutput {
    fn merge(&mut self, other: SweepOutput) {
        self.records.extend(other.records);
        self.audit_failures.extend(other.audit_failures);
    }
}

/// `derive_seed(base, hash(tag), n, rep)`, the seed of one run.
pub fn run_seed(base: u64, tag: &str, n: u64, rep: u64) -> u64 {
    derive_seed(base, tag_hash(tag), n, rep)
}

/// `L_f`: the closed form when there is one, otherwise the quadrature
/// oracle for `d ≤ 3`.
pub fn oracle_log_partition(f: &dyn TargetFunction) -> Option<f64> {
    f.exact_log_partition()
        .or_else(|| (f.dim() <= QUADRATURE_MAX_DIM).then(|| quadrature::log_partition(f)))
}

struct Target {
    id: FunctionId,
    label: String,
    f: Box<dyn TargetFunction>,
}

impl Target {
    fn new(id: &FunctionId) -> Self {
        Self {
            label: id.to_string(),
            f: id.build(),
            id: id.clone(),
        }
    }

    fn record(&self, algorithm: &str, n: u64, rep: u64, seed: u64) -> RunRecord {
        RunRecord {
            algorithm: algorithm.to_owned(),
            function: self.label.clone(),
            beta: self.id.beta(),
            d: self.id.dim(),
            n_budget: n,
            n_used: 0,
            rep,
            seed,
            value: None,
            error: None,
            metric: String::new(),
            wall_ns: 0,
        }
    }
}

fn failure(mut r: RunRecord, e: &Error) -> RunRecord {
    r.metric = format!("error:{}", e.kind());
    r
}

fn elapsed(start: Instant, timing: bool) -> u64 {
    if timing {
        start.elapsed().as_nanos() as u64
    } else {
        0
    }
}

/// Checks one estimate against the counted calls and the documented cost.
fn audit_estimate(
    est: &LogPartitionEstimate,
    calls: u64,
    n: u64,
    d: usize,
    context: &str,
) -> Vec<String> {
    let mut out = Vec::new();
    if est.evals_used != calls {
        out.push(format!(
            "{context}: reported {} evaluations, counted {calls}",
            est.evals_used
        ));
    }
    if est.evals_used > n {
        out.push(format!(
            "{context}: used {} evaluations, budget {n}",
            est.evals_used
        ));
    }
    let documented = est.algorithm.evals_for(n, d);
    if est.evals_used != documented {
        out.push(format!(
            "{context}: used {} evaluations, documented {documented}",
            est.evals_used
        ));
    }
    out
}

fn estimate_run(
    target: &Target,
    oracle: Option<f64>,
    est: Estimator,
    n: u64,
    rep: u64,
    spec: &ExperimentSpec,
) -> SweepOutput {
    let seed = run_seed(spec.base_seed, est.id(), n, rep);
    let base = target.record(est.id(), n, rep, seed);
    let counted = Counting::new(target.f.as_ref());
    let start = Instant::now();
    let result = est.run(&counted, n, seed);
    let wall_ns = elapsed(start, spec.timing);
    match result {
        Ok(e) => {
            let context = format!("{} {} n={n} rep={rep}", est.id(), target.label);
            let audit_failures = audit_estimate(&e, counted.calls(), n, target.id.dim(), &context);
            SweepOutput {
                records: vec![RunRecord {
                    n_used: e.evals_used,
                    value: Some(e.value),
                    error: oracle.map(|l| (e.value - l).abs()),
                    metric: LOG_PARTITION_METRIC.to_owned(),
                    wall_ns,
                    ..base
                }],
                audit_failures,
            }
        }
        Err(err) => SweepOutput {
            records: vec![failure(RunRecord { wall_ns, ..base }, &err)],
            audit_failures: vec![],
        },
    }
}

/// R log-partition records per `(function, algorithm, n)`. Deterministic
/// estimators run once per `n`; their record is repeated for every `rep`.
pub fn run_logpartition_sweep(spec: &ExperimentSpec) -> SweepOutput {
    let Algorithms::Estimators(estimators) = &spec.algorithms else {
        return SweepOutput::default();
    };
    let targets: Vec<Target> = spec.functions.iter().map(Target::new).collect();
    let oracles: Vec<Option<f64>> = targets
        .par_iter()
        .map(|t| oracle_log_partition(t.f.as_ref()))
        .collect();
    let mut tasks = Vec::new();
    for (ti, _) in targets.iter().enumerate() {
        for &est in estimators {
            for &n in spec.budgets.values() {
                let reps = if est.is_stochastic() { spec.reps } else { 1 };
                tasks.extend((0..reps).map(|rep| (ti, est, n, rep)));
            }
        }
    }
    let outputs: Vec<SweepOutput> = tasks
        .into_par_iter()
        .map(|(ti, est, n, rep)| {
            let mut out = estimate_run(&targets[ti], oracles[ti], est, n, rep, spec);
            if !est.is_stochastic() {
                let first = out.records[0].clone();
                out.records.extend((1..spec.reps).map(|rep| RunRecord {
                    rep,
                    seed: run_seed(spec.base_seed, est.id(), n, rep),
                    ..first.clone()
                }));
            }
            out
        })
        .collect();
    let mut all = SweepOutput::default();
    for o in outputs {
        all.merge(o);
    }
    all
}

/// Draws `size` points block by block, each block on its own stream
/// derived from `seed`.
fn draw_blocks<T: Send>(
    size: usize,
    seed: u64,
    draw_block: impl Fn(usize, &mut gibbs_core::rng::Stream) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let blocks = size.div_ceil(SAMPLE_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = SAMPLE_BLOCK.min(size - b * SAMPLE_BLOCK);
            let mut rng = stream(derive_seed(seed, tag_hash("block"), b as u64, 0));
            draw_block(len, &mut rng)
        })
        .collect()
}

/// `size` exact draws from `P_f`.
pub fn exact_batch(f: &dyn TargetFunction, size: usize, seed: u64) -> Result<EmpiricalBatch> {
    let d = f.dim();
    let blocks = draw_blocks(size, seed, |len, rng| {
        let mut pts = vec![0.0; len * d];
        for x in pts.chunks_exact_mut(d) {
            if !f.sample_scaled(1.0, rng, x) {
                return Err(Error::MissingOracle("exact sampler"));
            }
        }
        Ok(pts)
    })?;
    EmpiricalBatch::new(d, blocks.concat(), "exact")
}

struct SampledBatch {
    batch: EmpiricalBatch,
    /// Largest per-sample evaluation count.
    max_evals: u64,
    /// Evaluations beyond the shared setup, summed over the batch.
    fresh_evals: u64,
}

fn sampler_batch(
    sampler: &dyn PointSampler,
    size: usize,
    seed: u64,
    label: &str,
) -> Result<SampledBatch> {
    let d = sampler.dim();
    let shared = sampler.shared_evals();
    let blocks = draw_blocks(size, seed, |len, rng| {
        let mut pts = Vec::with_capacity(len * d);
        let (mut max_evals, mut fresh) = (0u64, 0u64);
        for _ in 0..len {
            let out = sampler.draw(rng)?;
            max_evals = max_evals.max(out.evals_used);
            fresh += out.evals_used - shared;
            pts.extend_from_slice(&out.point);
        }
        Ok((pts, max_evals, fresh))
    })?;
    let max_evals = blocks.iter().map(|b| b.1).max().unwrap_or(0);
    let fresh_evals = blocks.iter().map(|b| b.2).sum();
    let points: Vec<f64> = blocks.into_iter().flat_map(|b| b.0).collect();
    Ok(SampledBatch {
        batch: EmpiricalBatch::new(d, points, label)?,
        max_evals,
        fresh_evals,
    })
}

/// Grid model whose cell masses are the exact `P_f` masses, on up to
/// `4096` cells.
pub fn exact_cell_grid(f: &dyn TargetFunction) -> Result<GridApproximation> {
    let d = f.dim();
    let k = (1..=16usize)
        .rev()
        .find(|k| k.checked_pow(d as u32).is_some_and(|c| c <= 4096))
        .unwrap_or(1);
    let cells = k.pow(d as u32);
    let h = 1.0 / k as f64;
    let mut mid = vec![0.0; d];
    let values = (0..cells)
        .map(|i| {
            cell_midpoint(i, k, &mut mid);
            let lower: Vec<f64> = mid.iter().map(|m| m - h / 2.0).collect();
            let rect = Hyperrectangle::new(lower, vec![h; d])?;
            f.box_log_partition(&rect)
                .ok_or(Error::MissingOracle("box log-partition"))
        })
        .collect::<Result<Vec<f64>>>()?;
    GridApproximation::from_values(d, k, values)
}

/// Everything the metric computations of one function share.
struct References {
    energy: Vec<EnergyReference>,
    cells: Result<GridApproximation>,
}

fn metric_value(
    metric: Metric,
    batch: &EmpiricalBatch,
    rep: usize,
    refs: &References,
) -> Result<f64> {
    match metric {
        Metric::Energy2 => refs.energy[rep].distance_sq(batch),
        Metric::Tv => cell_histogram_tv(batch, refs.cells.as_ref().map_err(Clone::clone)?),
        Metric::SupLog | Metric::W1 => Err(Error::InvalidArgument(format!(
            "metric {metric} needs grid models, not samples"
        ))),
    }
}

fn metric_records(
    base: &RunRecord,
    spec: &ExperimentSpec,
    batch: &EmpiricalBatch,
    rep: usize,
    refs: &References,
) -> Vec<RunRecord> {
    spec.metrics
        .iter()
        .map(|&m| match metric_value(m, batch, rep, refs) {
            Ok(v) => RunRecord {
                value: Some(v),
                metric: m.id().to_owned(),
                ..base.clone()
            },
            Err(e) => failure(base.clone(), &e),
        })
        .collect()
}

fn ceiling_records(target: &Target, spec: &ExperimentSpec, refs: &References) -> Vec<RunRecord> {
    (0..CEILING_DRAWS)
        .into_par_iter()
        .flat_map_iter(|c| {
            let seed_a = run_seed(spec.base_seed, CEILING_ALGORITHM, 0, c);
            let seed_b = run_seed(spec.base_seed, CEILING_ALGORITHM, 1, c);
            let base = target.record(CEILING_ALGORITHM, 0, c, seed_a);
            let pair =
                exact_batch(target.f.as_ref(), spec.reference_samples, seed_a).and_then(|a| {
                    Ok((
                        a,
                        exact_batch(target.f.as_ref(), spec.reference_samples, seed_b)?,
                    ))
                });
            let records: Vec<RunRecord> = match pair {
                Err(e) => vec![failure(base, &e)],
                Ok((a, b)) => spec
                    .metrics
                    .iter()
                    .map(|&m| {
                        let v = match m {
                            Metric::Energy2 => gibbs_core::metrics::energy_distance_sq(&a, &b),
                            _ => metric_value(m, &a, 0, refs),
                        };
                        match v {
                            Ok(v) => RunRecord {
                                value: Some(v),
                                metric: m.id().to_owned(),
                                ..base.clone()
                            },
                            Err(e) => failure(base.clone(), &e),
                        }
                    })
                    .collect(),
            };
            records
        })
        .collect()
}

fn sampler_group(
    target: &Target,
    kind: SamplerKind,
    n: u64,
    spec: &ExperimentSpec,
    refs: &References,
) -> SweepOutput {
    let counted = Counting::new(target.f.as_ref());
    let sampler = match kind.prepare(&counted, n) {
        Ok(s) => s,
        Err(e) => {
            let records = (0..spec.reps)
                .map(|rep| {
                    let seed = run_seed(spec.base_seed, kind.id(), n, rep);
                    failure(target.record(kind.id(), n, rep, seed), &e)
                })
                .collect();
            return SweepOutput {
                records,
                audit_failures: vec![],
            };
        }
    };
    let shared = sampler.shared_evals();
    let setup = shared + sampler.auxiliary_evals();
    let context = format!("{} {} n={n}", kind.id(), target.label);
    let mut audit_failures = Vec::new();
    if counted.calls() != setup {
        audit_failures.push(format!(
            "{context}: setup made {} calls, reported {setup}",
            counted.calls()
        ));
    }
    let runs: Vec<(Vec<RunRecord>, u64, Option<String>)> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = run_seed(spec.base_seed, kind.id(), n, rep);
            let base = target.record(kind.id(), n, rep, seed);
            let start = Instant::now();
            match sampler_batch(sampler.as_ref(), spec.reference_samples, seed, kind.id()) {
                Err(e) => (vec![failure(base, &e)], 0, None),
                Ok(s) => {
                    let over = (s.max_evals > n).then(|| {
                        format!(
                            "{context} rep={rep}: a sample used {} evaluations",
                            s.max_evals
                        )
                    });
                    let base = RunRecord {
                        n_used: s.max_evals,
                        ..base
                    };
                    let mut records = metric_records(&base, spec, &s.batch, rep as usize, refs);
                    let wall_ns = elapsed(start, spec.timing);
                    for r in &mut records {
                        r.wall_ns = wall_ns;
                    }
                    (records, s.fresh_evals, over)
                }
            }
        })
        .collect();
    let mut records = Vec::new();
    let mut fresh = 0;
    for (r, f, over) in runs {
        records.extend(r);
        fresh += f;
        audit_failures.extend(over);
    }
    if counted.calls() != setup + fresh {
        audit_failures.push(format!(
            "{context}: counted {} calls, samples reported {}",
            counted.calls(),
            setup + fresh
        ));
    }
    SweepOutput {
        records,
        audit_failures,
    }
}

/// For every `(function, algorithm, n, rep)` draws a batch of
/// `reference_samples` points and scores it against an exact reference
/// batch. The reference for repetition `rep` is shared by all algorithms
/// and budgets. Adds `exact-ceiling` rows from independent exact batches.
pub fn run_sampling_sweep(spec: &ExperimentSpec) -> SweepOutput {
    let Algorithms::Samplers(kinds) = &spec.algorithms else {
        return SweepOutput::default();
    };
    let mut all = SweepOutput::default();
    for id in &spec.functions {
        let target = Target::new(id);
        let f = target.f.as_ref();
        let energy: Result<Vec<EnergyReference>> = if spec.metrics.contains(&Metric::Energy2) {
            (0..spec.reps)
                .into_par_iter()
                .map(|rep| {
                    let seed = run_seed(spec.base_seed, "reference", 0, rep);
                    exact_batch(f, spec.reference_samples, seed).map(EnergyReference::new)
                })
                .collect()
        } else {
            Ok(Vec::new())
        };
        let energy = match energy {
            Ok(e) => e,
            Err(e) => {
                all.records
                    .push(failure(target.record("reference", 0, 0, 0), &e));
                continue;
            }
        };
        let refs = References {
            energy,
            cells: exact_cell_grid(f),
        };
        all.records.extend(ceiling_records(&target, spec, &refs));
        let groups: Vec<(SamplerKind, u64)> = kinds
            .iter()
            .flat_map(|&k| spec.budgets.values().iter().map(move |&n| (k, n)))
            .collect();
        let outputs: Vec<SweepOutput> = groups
            .into_par_iter()
            .map(|(k, n)| sampler_group(&target, k, n, spec, &refs))
            .collect();
        for o in outputs {
            all.merge(o);
        }
    }
    all
}

/// Runs the sweep that matches the spec's mode.
pub fn run_sweep(spec: &ExperimentSpec) -> SweepOutput {
    match spec.algorithms {
        Algorithms::Estimators(_) => run_logpartition_sweep(spec),
        Algorithms::Samplers(_) => run_sampling_sweep(spec),
    }
}
