//! Budgeted rejection sampling and the samplers built on it.

use rand::Rng;

use super::{PointSampler, SamplerOutcome};
use crate::budget::EvalBudget;
use crate::error::{Error, Result};
use crate::estimators::hybrid_cells_per_axis;
use crate::grid::{cell_index, cell_midpoint, GridApproximation};
use crate::rng::{uniform, Stream};
use crate::target::{sup_norm, TargetFunction};

/// A proposal `P_g` with an envelope `g` known at every drawn point.
pub trait Proposal: Sync {
    fn dim(&self) -> usize;

    /// Draws `x ~ P_g` into `out` and returns `g(x)`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64;
}

/// Constant envelope `g ≡ level` with the uniform proposal.
#[derive(Debug, Clone, Copy)]
pub struct UniformEnvelope {
    pub dim: usize,
    pub level: f64,
}

impl Proposal for UniformEnvelope {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64 {
        for x in out.iter_mut() {
            *x = uniform(rng);
        }
        self.level
    }
}

/// Envelope `g + offset` for a grid model `g`, proposing from `P_g`.
#[derive(Debug, Clone, Copy)]
pub struct GridEnvelope<'a> {
    pub grid: &'a GridApproximation,
    pub offset: f64,
}

impl Proposal for GridEnvelope<'_> {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64 {
        let cell = self.grid.sample_with_cell(rng, out);
        self.grid.values()[cell] + self.offset
    }
}

/// Slack allowed before `f(x) > g(x)` counts as an envelope violation.
fn envelope_tolerance(g: f64) -> f64 {
    1e-12 * g.abs().max(1.0)
}

/// At most `n` rounds of: draw `x ~ P_g`, accept if `log u + g(x) ≤ f(x)`.
/// After `n` rejections a fresh draw from `P_g` is returned with
/// `fell_back` set. Each round costs one evaluation of `f`.
pub fn rejection_sampling<P: Proposal, R: Rng + ?Sized>(
    f: &dyn TargetFunction,
    proposal: &P,
    n: u64,
    rng: &mut R,
) -> Result<SamplerOutcome> {
    if proposal.dim() != f.dim() {
        return Err(Error::ShapeMismatch(
            "proposal and target dimensions differ".into(),
        ));
    }
    let mut budget = EvalBudget::new(n);
    let mut x = vec![0.0; f.dim()];
    for round in 1..=n {
        let g = proposal.draw(rng, &mut x);
        budget.reserve(1)?;
        let fx = f.evaluate(&x);
        if fx > g + envelope_tolerance(g) {
            return Err(Error::EnvelopeViolation {
                f_value: fx,
                envelope: g,
            });
        }
        if uniform(rng).ln() + g <= fx {
            return Ok(SamplerOutcome {
                point: x,
                accepted_at: Some(round),
                evals_used: budget.used(),
                fell_back: false,
            });
        }
    }
    proposal.draw(rng, &mut x);
    Ok(SamplerOutcome {
        point: x,
        accepted_at: None,
        evals_used: budget.used(),
        fell_back: true,
    })
}

fn known_max(f: &dyn TargetFunction) -> Result<f64> {
    f.exact_max().ok_or(Error::MissingOracle("exact maximum"))
}

/// Rejection sampling with the uniform proposal and constant envelope `M_f`.
pub fn uniform_rejection_sampling<R: Rng + ?Sized>(
    f: &dyn TargetFunction,
    n: u64,
    rng: &mut R,
) -> Result<SamplerOutcome> {
    let level = known_max(f)?;
    rejection_sampling(
        f,
        &UniformEnvelope {
            dim: f.dim(),
            level,
        },
        n,
        rng,
    )
}

/// [`uniform_rejection_sampling`] as a prepared sampler.
pub struct UniformRejectionSampler<'a> {
    f: &'a dyn TargetFunction,
    envelope: UniformEnvelope,
    rounds: u64,
}

impl<'a> UniformRejectionSampler<'a> {
    pub fn new(f: &'a dyn TargetFunction, n: u64) -> Result<Self> {
        let level = known_max(f)?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "rejection sampling needs n >= 1".into(),
            ));
        }
        Ok(Self {
            f,
            envelope: UniformEnvelope {
                dim: f.dim(),
                level,
            },
            rounds: n,
        })
    }
}

impl PointSampler for UniformRejectionSampler<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        rejection_sampling(self.f, &self.envelope, self.rounds, rng)
    }
}

/// Upper bound on `M_{f−g} = sup_x (f(x) − g(x))` for a grid model `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualBound {
    pub value: f64,
    /// False when the bound came from dense maximization plus a Lipschitz
    /// margin rather than from a closed form.
    pub exact: bool,
    /// Evaluations of `f` spent on the dense search.
    pub evals: u64,
}

/// Target lattice size for the dense residual search.
const DENSE_POINTS: f64 = 1e6;

impl ResidualBound {
    /// Uses the target's closed form when it has one. Otherwise evaluates
    /// `f − g` at the midpoints of an aligned lattice with about 10⁶ points
    /// (`k` subcells per grid cell and axis) and adds `|f|_1 · h · √d`,
    /// where `h` is the lattice spacing. These evaluations are setup cost of
    /// the bound, not charged to the sampler's budget.
    pub fn for_grid(f: &dyn TargetFunction, grid: &GridApproximation) -> Self {
        let n = grid.cells_per_axis();
        if let Some(value) = f.grid_residual_max(n) {
            return Self {
                value,
                exact: true,
                evals: 0,
            };
        }
        let d = f.dim();
        let per_axis = DENSE_POINTS.powf(1.0 / d as f64).floor() as usize;
        let k = (per_axis / n).max(1);
        let fine = n * k;
        let total = fine.pow(d as u32);
        let mut x = vec![0.0; d];
        let mut best = f64::NEG_INFINITY;
        for i in 0..total {
            cell_midpoint(i, fine, &mut x);
            let residual = f.evaluate(&x) - grid.values()[cell_index(&x, n)];
            best = best.max(residual);
        }
        let margin = f.lipschitz().value * (d as f64).sqrt() / fine as f64;
        Self {
            value: best + margin,
            exact: false,
            evals: total as u64,
        }
    }
}

/// Rejection sampling against the envelope `g + M_{f−g}`, where `g` is the
/// grid model built from `⌊n/2⌋` evaluations, with `⌈n/2⌉` rounds.
pub struct PcRsSampler<'a> {
    f: &'a dyn TargetFunction,
    grid: GridApproximation,
    residual: ResidualBound,
    rounds: u64,
}

impl<'a> PcRsSampler<'a> {
    pub fn new(f: &'a dyn TargetFunction, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("pc+rs sampling needs n >= 2".into()));
        }
        let mut budget = EvalBudget::new(n / 2);
        let cells = hybrid_cells_per_axis(n, f.dim()) as usize;
        let grid = GridApproximation::build(f, cells, &mut budget)?;
        let residual = ResidualBound::for_grid(f, &grid);
        Ok(Self {
            f,
            grid,
            residual,
            rounds: n - n / 2,
        })
    }

    pub fn grid(&self) -> &GridApproximation {
        &self.grid
    }

    pub fn residual(&self) -> ResidualBound {
        self.residual
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SamplerOutcome> {
        let envelope = GridEnvelope {
            grid: &self.grid,
            offset: self.residual.value,
        };
        let mut out = rejection_sampling(self.f, &envelope, self.rounds, rng)?;
        out.evals_used += self.grid.num_cells() as u64;
        Ok(out)
    }
}

impl PointSampler for PcRsSampler<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn draw(&self, rng: &mut Stream) -> Result<SamplerOutcome> {
        self.sample(rng)
    }

    fn shared_evals(&self) -> u64 {
        self.grid.num_cells() as u64
    }

    fn auxiliary_evals(&self) -> u64 {
        self.residual.evals
    }
}

/// Largest `‖f‖_∞` for which [`exact_sampler_known_z`] is valid: `log(3/2)`.
pub const KNOWN_Z_SUP_NORM: f64 = 0.405_465_108_108_164_4;

const KNOWN_Z_SLACK: f64 = 1e-12;

pub(crate) fn check_known_z_range(f: &dyn TargetFunction) -> Result<()> {
    if let Some(l) = f.exact_log_partition() {
        if l.abs() > 1e-9 {
            return Err(Error::PreconditionViolated(format!(
                "log-partition is {l}, expected 0"
            )));
        }
    }
    if let Some(s) = sup_norm(f) {
        if s > KNOWN_Z_SUP_NORM + KNOWN_Z_SLACK {
            return Err(Error::PreconditionViolated(format!(
                "sup norm {s} exceeds log(3/2)"
            )));
        }
    }
    Ok(())
}

/// Exact sampling from `P_f` for `f` with `L_f = 0` and `‖f‖_∞ ≤ log(3/2)`,
/// using one evaluation.
///
/// Runs a single rejection round for `f̃ = log(2e^f − 1)` against the
/// constant envelope `log 2` with a uniform proposal; on rejection it
/// returns a fresh uniform point. The round accepts with probability 1/2
/// and the mixture of both branches has density exactly `e^f`.
pub fn exact_sampler_known_z<R: Rng + ?Sized>(
    f: &dyn TargetFunction,
    rng: &mut R,
) -> Result<SamplerOutcome> {
    check_known_z_range(f)?;
    let mut x = vec![0.0; f.dim()];
    for v in x.iter_mut() {
        *v = uniform(rng);
    }
    let fx = f.evaluate(&x);
    if fx.abs() > KNOWN_Z_SUP_NORM + KNOWN_Z_SLACK {
        return Err(Error::PreconditionViolated(format!(
            "|f(x)| = {} exceeds log(3/2)",
            fx.abs()
        )));
    }
    let tilted = (2.0 * fx.exp() - 1.0).ln();
    if uniform(rng).ln() + std::f64::consts::LN_2 <= tilted {
        return Ok(SamplerOutcome {
            point: x,
            accepted_at: Some(1),
            evals_used: 1,
            fell_back: false,
        });
    }
    for v in x.iter_mut() {
        *v = uniform(rng);
    }
    Ok(SamplerOutcome {
        point: x,
        accepted_at: None,
        evals_used: 1,
        fell_back: true,
    })
}
