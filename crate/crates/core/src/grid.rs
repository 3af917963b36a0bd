//! Piecewise-constant approximation on the regular `N^d` midpoint grid.
//!
//! Cells are indexed row-major with the first axis most significant. A cell
//! with multi-index `(k_1, …, k_d)` has midpoint `((k_j + 1/2) / N)_j`, and a
//! point with a coordinate exactly on a cell boundary belongs to the lower
//! cell: index `min(⌊N x_j⌋, N − 1)`.

use rand::Rng;

use crate::budget::EvalBudget;
use crate::error::{Error, Result};
use crate::numeric::{int_pow, log_mean_exp, log_sum_exp, CompensatedSum};
use crate::rect::Hyperrectangle;
use crate::target::{Bound, TargetFunction};

/// Largest supported grid dimension.
pub const MAX_GRID_DIM: usize = 32;

/// Points evaluated per `evaluate_batch` call while building a grid.
const BUILD_CHUNK: usize = 4096;

/// The piecewise-constant model `g_n` together with its sampling tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GridApproximation {
    dim: usize,
    cells_per_axis: usize,
    values: Vec<f64>,
    log_partition: f64,
    /// Walker alias table over the cell weights.
    alias: AliasTable,
}

/// Walker's alias table (Vose's construction): a draw costs one 64-bit
/// word, split into a column index and a coin.
#[derive(Debug, Clone, PartialEq)]
struct AliasTable {
    keep: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// `weights` are nonnegative with at least one positive entry.
    fn new(weights: &[f64]) -> Self {
        let k = weights.len();
        let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
        let mut keep: Vec<f64> = weights.iter().map(|w| w / total * k as f64).collect();
        let mut alias: Vec<u32> = (0..k as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| keep[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            keep[l] -= 1.0 - keep[s];
            if keep[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers carry rounding residue only. A zero-weight cell must
        // never be returned, so it defers to a positive one.
        let positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for i in small.into_iter().chain(large) {
            if weights[i] > 0.0 {
                keep[i] = 1.0;
            } else {
                keep[i] = 0.0;
                alias[i] = positive as u32;
            }
        }
        Self { keep, alias }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pick(rng.next_u64())
    }

    #[inline]
    fn pick(&self, word: u64) -> usize {
        let wide = u128::from(word) * self.keep.len() as u128;
        let column = (wide >> 64) as usize;
        let coin = ((wide as u64) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        // Both loads happen unconditionally so the choice compiles to a
        // select; the coin is close to a fair flip for peaked targets.
        let alias = self.alias[column] as usize;
        let keep = self.keep[column];
        std::hint::select_unpredictable(coin < keep, column, alias)
    }
}

/// Division by the cells-per-axis count through a precomputed reciprocal,
/// exact for dividends below `2^32`.
#[derive(Clone, Copy)]
struct AxisDivisor {
    n: u64,
    magic: u64,
}

impl AxisDivisor {
    fn new(n: usize) -> Self {
        let n = n as u64;
        Self {
            n,
            magic: (u64::MAX / n).wrapping_add(1),
        }
    }

    #[inline]
    fn quotient(self, x: u64) -> u64 {
        debug_assert!(x < 1 << 32);
        if self.n == 1 {
            return x;
        }
        ((u128::from(self.magic) * u128::from(x)) >> 64) as u64
    }
}

/// Midpoint of the cell with flat index `index`.
pub fn cell_midpoint(index: usize, cells_per_axis: usize, out: &mut [f64]) {
    let mut rem = index;
    for j in (0..out.len()).rev() {
        out[j] = ((rem % cells_per_axis) as f64 + 0.5) / cells_per_axis as f64;
        rem /= cells_per_axis;
    }
}

/// Flat index of the cell containing `x`, boundary points going to the
/// lower cell.
#[inline]
pub fn cell_index(x: &[f64], cells_per_axis: usize) -> usize {
    let n = cells_per_axis as f64;
    x.iter().fold(0usize, |acc, &xj| {
        let k = ((xj * n) as usize).min(cells_per_axis - 1);
        acc * cells_per_axis + k
    })
}

impl GridApproximation {
    /// Evaluates `f` at all `N^d` cell midpoints, charging `N^d` to `budget`.
    pub fn build(
        f: &dyn TargetFunction,
        cells_per_axis: usize,
        budget: &mut EvalBudget,
    ) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::InvalidArgument(
                "cells_per_axis must be at least 1".into(),
            ));
        }
        let d = f.dim();
        let n = int_pow(cells_per_axis as u64, d);
        if n > u32::MAX as u64 {
            return Err(Error::InvalidArgument(format!(
                "grid of {n} cells is too large"
            )));
        }
        budget.reserve(n)?;
        let n = n as usize;
        let mut values = vec![0.0; n];
        let mut points = vec![0.0; BUILD_CHUNK.min(n) * d];
        for (c, chunk) in values.chunks_mut(BUILD_CHUNK).enumerate() {
            let start = c * BUILD_CHUNK;
            let pts = &mut points[..chunk.len() * d];
            for (i, p) in pts.chunks_exact_mut(d).enumerate() {
                cell_midpoint(start + i, cells_per_axis, p);
            }
            f.evaluate_batch(pts, chunk);
        }
        Self::from_values(d, cells_per_axis, values)
    }

    /// Wraps precomputed cell values. Values may be `-inf` (zero-mass cells)
    /// but not NaN or `+inf`, and at least one must be finite.
    pub fn from_values(dim: usize, cells_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || cells_per_axis == 0 {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        if dim > MAX_GRID_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let expected = int_pow(cells_per_axis as u64, dim);
        if values.len() as u64 != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {cells_per_axis}^{dim} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidArgument(
                "grid values must be < +inf and not NaN".into(),
            ));
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(
                "grid has no positive-mass cell".into(),
            ));
        }
        let log_partition = log_mean_exp(&values);
        let weights: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
        let alias = AliasTable::new(&weights);
        Ok(Self {
            dim,
            cells_per_axis,
            values,
            log_partition,
            alias,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `L_g = log((1/n) Σ e^{values_i})`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn cell_index(&self, x: &[f64]) -> usize {
        cell_index(x, self.cells_per_axis)
    }

    /// `g(x)`: the value of the cell containing `x`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.values[self.cell_index(x)]
    }

    /// Probability mass `e^{values_i − L_g} / n` of every cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        let ln_n = (self.values.len() as f64).ln();
        self.values
            .iter()
            .map(|v| (v - self.log_partition - ln_n).exp())
            .collect()
    }

    /// Draws a cell with probability [`Self::cell_masses`] (one 64-bit
    /// word from the stream).
    #[inline]
    pub fn sample_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }

    /// Draws an exact sample from `P_g` into `out` and returns its cell.
    /// Consumes exactly `d + 1` words.
    pub fn sample_with_cell<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> usize {
        let mut words = [0u64; MAX_GRID_DIM + 1];
        for w in words[..=self.dim].iter_mut() {
            *w = rng.next_u64();
        }
        self.place(
            &words[..=self.dim],
            out,
            AxisDivisor::new(self.cells_per_axis),
        )
    }

    /// Batch form of [`Self::sample_with_cell`]: `words` holds `d + 1`
    /// pre-drawn words per point, in the order the single draw takes them.
    pub fn place_batch(&self, words: &[u64], points: &mut [f64], cells: &mut [usize]) {
        let div = AxisDivisor::new(self.cells_per_axis);
        for ((w, p), c) in words
            .chunks_exact(self.dim + 1)
            .zip(points.chunks_exact_mut(self.dim))
            .zip(cells.iter_mut())
        {
            *c = self.place(w, p, div);
        }
    }

    #[inline(always)]
    fn place(&self, words: &[u64], out: &mut [f64], div: AxisDivisor) -> usize {
        let cell = self.alias.pick(words[0]);
        let width = 1.0 / self.cells_per_axis as f64;
        let mut rem = cell as u64;
        for j in (0..self.dim).rev() {
            let q = div.quotient(rem);
            let k = rem - q * div.n;
            rem = q;
            let u = (words[j + 1] >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            out[j] = ((k as f64 + u) * width).min(1.0);
        }
        cell
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.sample_with_cell(rng, out);
    }

    /// For every axis, the cells overlapping `[lo, lo + h]` paired with the
    /// overlap length.
    fn axis_overlaps(&self, lo: f64, h: f64) -> Vec<(usize, f64)> {
        let n = self.cells_per_axis;
        let hi = lo + h;
        let first = ((lo * n as f64) as usize).min(n - 1);
        let last = ((hi * n as f64).ceil() as usize).clamp(first + 1, n);
        (first..last)
            .filter_map(|k| {
                let a = (k as f64 / n as f64).max(lo);
                let b = ((k + 1) as f64 / n as f64).min(hi);
                (b > a).then_some((k, b - a))
            })
            .collect()
    }
}

impl TargetFunction for GridApproximation {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.value_at(x)
    }

    fn lipschitz(&self) -> Bound {
        // Discontinuous unless constant.
        let constant = self.values.windows(2).all(|w| w[0] == w[1]);
        Bound::exact(if constant { 0.0 } else { f64::INFINITY })
    }

    fn exact_log_partition(&self) -> Option<f64> {
        Some(self.log_partition)
    }

    fn exact_max(&self) -> Option<f64> {
        Some(
            self.values
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }

    fn exact_min(&self) -> Option<f64> {
        Some(self.values.iter().copied().fold(f64::INFINITY, f64::min))
    }

    fn sample_scaled(&self, scale: f64, rng: &mut dyn rand::RngCore, out: &mut [f64]) -> bool {
        if scale == 1.0 {
            self.sample(rng, out);
            return true;
        }
        let scaled: Vec<f64> = self.values.iter().map(|v| scale * v).collect();
        match GridApproximation::from_values(self.dim, self.cells_per_axis, scaled) {
            Ok(g) => {
                g.sample(rng, out);
                true
            }
            Err(_) => false,
        }
    }

    fn has_exact_sampler(&self, scale: f64) -> bool {
        scale.is_finite()
    }

    fn box_log_partition(&self, rect: &Hyperrectangle) -> Option<f64> {
        let overlaps: Vec<Vec<(usize, f64)>> = (0..self.dim)
            .map(|j| self.axis_overlaps(rect.lower()[j], rect.size()[j]))
            .collect();
        if overlaps.iter().any(Vec::is_empty) {
            return None;
        }
        let mut terms = Vec::new();
        let mut idx = vec![0usize; self.dim];
        'outer: loop {
            let mut cell = 0;
            let mut log_w = 0.0;
            for j in 0..self.dim {
                let (k, len) = overlaps[j][idx[j]];
                cell = cell * self.cells_per_axis + k;
                log_w += len.ln();
            }
            terms.push(self.values[cell] + log_w);
            for j in (0..self.dim).rev() {
                idx[j] += 1;
                if idx[j] < overlaps[j].len() {
                    continue 'outer;
                }
                idx[j] = 0;
            }
            break;
        }
        Some(log_sum_exp(&terms) - rect.volume().ln())
    }

    fn grid_residual_max(&self, cells_per_axis: usize) -> Option<f64> {
        // Each finer aligned cell sits inside one of ours, where we are flat.
        cells_per_axis
            .is_multiple_of(self.cells_per_axis)
            .then_some(0.0)
    }

    fn label(&self) -> String {
        format!("grid:N={},d={}", self.cells_per_axis, self.dim)
    }
}

/// Builds the grid model of `f` with `cells_per_axis` cells per axis.
pub fn build_grid(
    f: &dyn TargetFunction,
    cells_per_axis: usize,
    budget: &mut EvalBudget,
) -> Result<GridApproximation> {
    GridApproximation::build(f, cells_per_axis, budget)
}
