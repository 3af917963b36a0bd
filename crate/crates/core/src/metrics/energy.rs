//! Energy distance between empirical distributions (V-statistic).
//!
//! One dimension uses sorted prefix sums and runs in `O(N log N)`. Higher
//! dimensions sum all pairwise distances in fixed-size blocks: coordinates
//! are stored per axis as `f32` (shifted by −1/2), each row of a block is
//! accumulated in `f32` lanes, and block totals are combined in `f64` in a
//! fixed order. The result therefore does not depend on the thread count.

use rayon::prelude::*;

use super::EmpiricalBatch;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

const ROW_BLOCK: usize = 256;
const COL_BLOCK: usize = 4096;
const LANES: usize = 16;

/// Axis-major `f32` copy of a batch.
struct Columns {
    dim: usize,
    len: usize,
    data: Vec<f32>,
}

impl Columns {
    fn new(batch: &EmpiricalBatch) -> Self {
        let (dim, len) = (batch.dim(), batch.len());
        let mut data = vec![0.0f32; dim * len];
        for (i, p) in batch.points().chunks_exact(dim).enumerate() {
            for (a, &v) in p.iter().enumerate() {
                data[a * len + i] = (v - 0.5) as f32;
            }
        }
        Self { dim, len, data }
    }

    fn axis(&self, a: usize, range: std::ops::Range<usize>) -> &[f32] {
        &self.data[a * self.len + range.start..a * self.len + range.end]
    }

    fn point(&self, i: usize, out: &mut [f32]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.data[a * self.len + i];
        }
    }
}

#[inline(always)]
fn row_sum_body(x: &[f32], cols: &[&[f32]]) -> f64 {
    let n = cols[0].len();
    let full = n - n % LANES;
    let mut acc = [0.0f32; LANES];
    match x.len() {
        2 => {
            let (c0, c1) = (&cols[0][..full], &cols[1][..full]);
            for (y0, y1) in c0.chunks_exact(LANES).zip(c1.chunks_exact(LANES)) {
                for l in 0..LANES {
                    let a = x[0] - y0[l];
                    let b = x[1] - y1[l];
                    acc[l] += (a * a + b * b).sqrt();
                }
            }
        }
        3 => {
            let (c0, c1, c2) = (&cols[0][..full], &cols[1][..full], &cols[2][..full]);
            for ((y0, y1), y2) in c0
                .chunks_exact(LANES)
                .zip(c1.chunks_exact(LANES))
                .zip(c2.chunks_exact(LANES))
            {
                for l in 0..LANES {
                    let a = x[0] - y0[l];
                    let b = x[1] - y1[l];
                    let c = x[2] - y2[l];
                    acc[l] += (a * a + b * b + c * c).sqrt();
                }
            }
        }
        _ => {
            for start in (0..full).step_by(LANES) {
                let mut sq = [0.0f32; LANES];
                for (a, col) in cols.iter().enumerate() {
                    let y = &col[start..start + LANES];
                    for l in 0..LANES {
                        let t = x[a] - y[l];
                        sq[l] += t * t;
                    }
                }
                for l in 0..LANES {
                    acc[l] += sq[l].sqrt();
                }
            }
        }
    }
    let mut total: f64 = acc.iter().map(|&v| f64::from(v)).sum();
    for j in full..n {
        let sq: f32 = x
            .iter()
            .zip(cols)
            .map(|(xa, col)| {
                let t = xa - col[j];
                t * t
            })
            .sum();
        total += f64::from(sq.sqrt());
    }
    total
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn row_sum_avx512(x: &[f32], cols: &[&[f32]]) -> f64 {
    row_sum_body(x, cols)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn row_sum_avx2(x: &[f32], cols: &[&[f32]]) -> f64 {
    row_sum_body(x, cols)
}

fn row_sum_portable(x: &[f32], cols: &[&[f32]]) -> f64 {
    row_sum_body(x, cols)
}

type RowSum = fn(&[f32], &[&[f32]]) -> f64;

/// Picks the widest kernel the CPU supports. All kernels perform the same
/// operations in the same order, so the result is identical.
fn row_kernel() -> RowSum {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature was detected at runtime.
            return |x, c| unsafe { row_sum_avx512(x, c) };
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
        {
            // SAFETY: the features were detected at runtime.
            return |x, c| unsafe { row_sum_avx2(x, c) };
        }
    }
    row_sum_portable
}

/// `Σ_i Σ_{j ∈ cols} ‖x_i − y_j‖` for rows `rows` of `xs`, restricted to
/// `j > i` when `upper_only` (self-distance of one batch).
fn block_sum(
    kernel: RowSum,
    xs: &Columns,
    ys: &Columns,
    rows: std::ops::Range<usize>,
    upper_only: bool,
) -> f64 {
    let d = xs.dim;
    let mut x = vec![0.0f32; d];
    let mut total = CompensatedSum::new();
    let first_col = if upper_only { rows.start + 1 } else { 0 };
    let mut col_start = first_col;
    while col_start < ys.len {
        let col_end = (col_start + COL_BLOCK).min(ys.len);
        for i in rows.clone() {
            let lo = if upper_only {
                col_start.max(i + 1)
            } else {
                col_start
            };
            if lo >= col_end {
                continue;
            }
            let cols: Vec<&[f32]> = (0..d).map(|a| ys.axis(a, lo..col_end)).collect();
            xs.point(i, &mut x);
            total.add(kernel(&x, &cols));
        }
        col_start = col_end;
    }
    total.value()
}

fn pair_sum(xs: &Columns, ys: &Columns, upper_only: bool) -> f64 {
    let kernel = row_kernel();
    let blocks: Vec<f64> = (0..xs.len.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let rows = b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(xs.len);
            block_sum(kernel, xs, ys, rows, upper_only)
        })
        .collect();
    blocks.into_iter().collect::<CompensatedSum>().value()
}

fn sorted_coords(batch: &EmpiricalBatch) -> Vec<f64> {
    let mut v = batch.points().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `Σ_{i,j} |a_i − b_j|` for sorted `a`, `b`.
fn cross_sum_1d(a: &[f64], b: &[f64]) -> f64 {
    let b_total: CompensatedSum = b.iter().copied().collect();
    let b_total = b_total.value();
    let mut below = CompensatedSum::new();
    let mut k = 0;
    let mut total = CompensatedSum::new();
    for &x in a {
        while k < b.len() && b[k] <= x {
            below.add(b[k]);
            k += 1;
        }
        let below_sum = below.value();
        let above = (b.len() - k) as f64;
        total.add(x * k as f64 - below_sum);
        total.add((b_total - below_sum) - x * above);
    }
    total.value()
}

/// `Σ_{i<j} |a_i − a_j|` for sorted `a`.
fn self_sum_1d(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    a.iter()
        .enumerate()
        .map(|(k, &x)| x * (2.0 * k as f64 - n + 1.0))
        .collect::<CompensatedSum>()
        .value()
}

/// `E‖X − X'‖` under the empirical measure of `batch` (diagonal included).
fn self_mean(batch: &EmpiricalBatch) -> f64 {
    let n = batch.len() as f64;
    let half = if batch.dim() == 1 {
        self_sum_1d(&sorted_coords(batch))
    } else {
        let cols = Columns::new(batch);
        pair_sum(&cols, &cols, true)
    };
    2.0 * half / (n * n)
}

/// Orders two batches canonically so that the cross term is computed the
/// same way for `(P, Q)` and `(Q, P)`.
fn canonical<'a>(
    p: &'a EmpiricalBatch,
    q: &'a EmpiricalBatch,
) -> (&'a EmpiricalBatch, &'a EmpiricalBatch) {
    let key = |b: &EmpiricalBatch| b.len();
    let swap = match key(p).cmp(&key(q)) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => p
            .points()
            .iter()
            .zip(q.points())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .is_some_and(|o| o.is_gt()),
    };
    if swap {
        (q, p)
    } else {
        (p, q)
    }
}

/// `E‖X − Y‖` with `X`, `Y` drawn from the two empirical measures.
fn cross_mean(p: &EmpiricalBatch, q: &EmpiricalBatch) -> f64 {
    let (p, q) = canonical(p, q);
    let denom = p.len() as f64 * q.len() as f64;
    let sum = if p.dim() == 1 {
        cross_sum_1d(&sorted_coords(p), &sorted_coords(q))
    } else {
        pair_sum(&Columns::new(p), &Columns::new(q), false)
    };
    sum / denom
}

fn check_dims(p: &EmpiricalBatch, q: &EmpiricalBatch) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::ShapeMismatch(format!(
            "batches of dimension {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    Ok(())
}

fn combine(cross: f64, self_p: f64, self_q: f64) -> f64 {
    (2.0 * cross - (self_p + self_q)).max(0.0)
}

/// Squared energy distance `2E‖X−Y‖ − E‖X−X'‖ − E‖Y−Y'‖` between the
/// empirical measures of `p` and `q` (V-statistic, so never negative).
pub fn energy_distance_sq(p: &EmpiricalBatch, q: &EmpiricalBatch) -> Result<f64> {
    check_dims(p, q)?;
    if p.points() == q.points() {
        return Ok(0.0);
    }
    Ok(combine(cross_mean(p, q), self_mean(p), self_mean(q)))
}

/// A batch with its self-distance term precomputed, for comparing many
/// batches against the same reference.
pub struct EnergyReference {
    batch: EmpiricalBatch,
    self_mean: f64,
}

impl EnergyReference {
    pub fn new(batch: EmpiricalBatch) -> Self {
        let self_mean = self_mean(&batch);
        Self { batch, self_mean }
    }

    pub fn batch(&self) -> &EmpiricalBatch {
        &self.batch
    }

    /// Same value as [`energy_distance_sq`] with the reference as one side.
    pub fn distance_sq(&self, other: &EmpiricalBatch) -> Result<f64> {
        check_dims(&self.batch, other)?;
        if self.batch.points() == other.points() {
            return Ok(0.0);
        }
        Ok(combine(
            cross_mean(&self.batch, other),
            self.self_mean,
            self_mean(other),
        ))
    }

    /// Distance between two references, reusing both cached terms.
    pub fn distance_sq_to(&self, other: &EnergyReference) -> Result<f64> {
        check_dims(&self.batch, &other.batch)?;
        if self.batch.points() == other.batch.points() {
            return Ok(0.0);
        }
        Ok(combine(
            cross_mean(&self.batch, &other.batch),
            self.self_mean,
            other.self_mean,
        ))
    }
}
