//! Samplers that pick one of many weighted proposals, plus plain grid
//! sampling.

use rand::Rng;

use super::{PointSampler, SamplerOutcome};
use crate::budget::EvalBudget;
use crate::error::{Error, Result};
use crate::estimators::{hybrid_cells_per_axis, pc_cells_per_axis};
use crate::grid::GridApproximation;
use crate::numeric::{exp_shifted_into, log_sum_exp, max_and_sum};
use crate::rng::{uniform, LaneStream, Stream};
use crate::target::TargetFunction;

const CHUNK: usize = 1024;

/// Streaming softmax selection over chunks: each chunk nominates one
/// candidate by its internal softmax, and the candidate replaces the
/// current choice with probability `Z_chunk / Z_seen`. The result is an
/// exact draw from the softmax over everything offered.
struct Reservoir {
    dim: usize,
    log_total: f64,
    chosen: Vec<f64>,
    scratch: Vec<f64>,
}

impl Reservoir {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            log_total: f64::NEG_INFINITY,
            chosen: vec![0.0; dim],
            scratch: Vec::with_capacity(CHUNK),
        }
    }

    /// Consumes two uniforms: one picks inside the chunk, one decides
    /// whether the pick replaces the current choice.
    fn offer<R: Rng + ?Sized>(&mut self, points: &[f64], weights: &[f64], rng: &mut R) {
        let (max, _) = max_and_sum(weights);
        let u_pick = uniform(rng);
        let u_keep = uniform(rng);
        if max == f64::NEG_INFINITY {
            return;
        }
        self.scratch.resize(weights.len(), 0.0);
        exp_shifted_into(weights, max, &mut self.scratch);
        let (_, total) = max_and_sum(&self.scratch);
        let target = u_pick * total;
        let mut acc = 0.0;
        let mut pick = None;
        let mut last_positive = 0;
        for (i, &p) in self.scratch.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
            }
            acc += p;
            if acc > target {
                pick = Some(i);
                break;
            }
        }
        let i = pick.unwrap_or(last_positive);
        let chunk_lse = max + total.ln();
        let new_total = log_sum_exp(&[self.log_total, chunk_lse]);
        if u_keep < (chunk_lse - new_total).exp() {
            self.chosen
                .copy_from_slice(&points[i * self.dim..(i + 1) * self.dim]);
        }
        self.log_total = new_total;
    }
}

/// Softmax over `n` uniform proposals: returns `X_I` with
/// `P(I = i) ∝ e^{f(X_i)}`. Uses exactly `n` evaluations. Proposals come
/// from a [`LaneStream`] forked off `rng`.
pub fn mc_sampling<R: Rng + ?Sized>(
    f: &dyn TargetFunction,
    n: u64,
    rng: &mut R,
) -> Result<SamplerOutcome> {
    if n == 0 {
        return Err(Error::InvalidArgument("mc sampling needs n >= 1".into()));
    }
    let d = f.dim();
    let mut budget = EvalBudget::new(n);
    let mut points = vec![0.0; CHUNK.min(n as usize) * d];
    let mut values = vec![0.0; CHUNK.min(n as usize)];
    let mut reservoir = Reservoir::new(d);
    let mut lanes = LaneStream::fork(rng);
    let mut left = n;
    while left > 0 {
        let k = left.min(CHUNK as u64) as usize;
        budget.reserve(k as u64)?;
        lanes.fill_uniform(&mut points[..k * d]);
        f.evaluate_batch(&points[..k * d], &mut values[..k]);
        reservoir.offer(&points[..k * d], &values[..k], &mut lanes);
        left -= k as u64;
    }
    Ok(SamplerOutcome::plain(reservoir.chosen, budget.used()))
}

/// [`mc_sampling`] as a prepared sampler.
pub struct McSampler<'a> {
    f: &'a dyn TargetFunction,
    n: u64,
}

impl<'a> McSampler<'a> {
    pub fn new(f: &'a dyn TargetFunction, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mc sampling needs n >= 1".into()));
        }
        Ok(Self { f, n })
    }
}

impl PointSampler for McSampler<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        mc_sampling(self.f, self.n, rng)
    }
}

/// Exact sampling from the grid model with `⌊n^{1/d}⌋` cells per axis.
/// Every draw reuses the same `N^d` evaluations.
pub struct PcSampler {
    grid: GridApproximation,
}

impl PcSampler {
    pub fn new(f: &dyn TargetFunction, n: u64) -> Result<Self> {
        let cells = pc_cells_per_axis(n, f.dim());
        if cells == 0 {
            return Err(Error::InvalidArgument("pc sampling needs n >= 1".into()));
        }
        let mut budget = EvalBudget::new(n);
        let grid = GridApproximation::build(f, cells as usize, &mut budget)?;
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &GridApproximation {
        &self.grid
    }
}

impl PointSampler for PcSampler {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        let mut x = vec![0.0; self.grid.dim()];
        self.grid.sample(rng, &mut x);
        Ok(SamplerOutcome::plain(x, self.grid.num_cells() as u64))
    }

    fn shared_evals(&self) -> u64 {
        self.grid.num_cells() as u64
    }
}

/// Softmax of `f − g` over `M = n − N^d` proposals from the grid model
/// `P_g`, with `N = ⌊(⌊n/2⌋)^{1/d}⌋`.
pub struct PcMcSampler<'a> {
    f: &'a dyn TargetFunction,
    grid: GridApproximation,
    proposals: u64,
}

impl<'a> PcMcSampler<'a> {
    pub fn new(f: &'a dyn TargetFunction, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("pc+mc sampling needs n >= 2".into()));
        }
        let mut budget = EvalBudget::new(n);
        let cells = hybrid_cells_per_axis(n, f.dim()) as usize;
        let grid = GridApproximation::build(f, cells, &mut budget)?;
        Ok(Self {
            f,
            proposals: budget.remaining(),
            grid,
        })
    }

    /// Builds on an existing grid, drawing `proposals` points per sample.
    pub fn with_grid(
        f: &'a dyn TargetFunction,
        grid: GridApproximation,
        proposals: u64,
    ) -> Result<Self> {
        if proposals == 0 {
            return Err(Error::InvalidArgument(
                "pc+mc sampling needs proposals".into(),
            ));
        }
        if grid.dim() != f.dim() {
            return Err(Error::ShapeMismatch(
                "grid and target dimensions differ".into(),
            ));
        }
        Ok(Self { f, grid, proposals })
    }

    pub fn grid(&self) -> &GridApproximation {
        &self.grid
    }

    /// One draw with exactly `N^d + M` evaluations.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SamplerOutcome> {
        let d = self.f.dim();
        let mut budget = EvalBudget::new(self.proposals);
        let cap = CHUNK.min(self.proposals as usize);
        let mut points = vec![0.0; cap * d];
        let mut words = vec![0u64; cap * (d + 1)];
        let mut cells = vec![0usize; cap];
        let mut weights = vec![0.0; cap];
        let mut reservoir = Reservoir::new(d);
        let mut lanes = LaneStream::fork(rng);
        let mut left = self.proposals;
        while left > 0 {
            let k = left.min(CHUNK as u64) as usize;
            budget.reserve(k as u64)?;
            lanes.fill_words(&mut words[..k * (d + 1)]);
            self.grid
                .place_batch(&words[..k * (d + 1)], &mut points[..k * d], &mut cells[..k]);
            self.f.evaluate_batch(&points[..k * d], &mut weights[..k]);
            for (w, &c) in weights[..k].iter_mut().zip(&cells[..k]) {
                *w -= self.grid.values()[c];
            }
            reservoir.offer(&points[..k * d], &weights[..k], &mut lanes);
            left -= k as u64;
        }
        Ok(SamplerOutcome::plain(
            reservoir.chosen,
            self.grid.num_cells() as u64 + budget.used(),
        ))
    }
}

impl PointSampler for PcMcSampler<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        self.sample(rng)
    }

    fn shared_evals(&self) -> u64 {
        self.grid.num_cells() as u64
    }
}
