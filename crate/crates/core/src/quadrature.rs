//! Deterministic reference integrals, independent of the closed forms.
//!
//! One dimension uses globally adaptive Gauss–Kronrod (7/15) refinement;
//! two dimensions nest it; three and more use a streaming midpoint grid.
//! Integrands are exponentiated after subtracting a probe maximum so that
//! `β = 10⁴` targets stay representable.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::numeric::CompensatedSum;
use crate::target::TargetFunction;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

/// Integration tolerances: stop once the estimated error is at most
/// `max(abs, rel · |I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Piece {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// `∫_a^b f` by globally adaptive G7K15: the interval with the largest
/// error estimate is bisected until the total error meets `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    while error > tol.abs.max(tol.rel * value.abs()) && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        value -= worst.value;
        error -= worst.error;
        if mid <= worst.a || mid >= worst.b {
            // No longer splittable in floating point; keep it as final.
            value += worst.value;
            heap.push(Piece {
                error: 0.0,
                ..worst
            });
            continue;
        }
        for piece in [kronrod(&f, worst.a, mid), kronrod(&f, mid, worst.b)] {
            value += piece.value;
            error += piece.error;
            heap.push(piece);
        }
    }
    // Re-sum to shed the drift of the running totals.
    let value: CompensatedSum = heap.iter().map(|p| p.value).collect();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult {
        value: value.value(),
        error,
    }
}

/// Max of `f` over a coarse probe lattice, used as the exponent shift.
fn probe_max(f: &dyn TargetFunction, per_axis: usize) -> f64 {
    let d = f.dim();
    let total = per_axis.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut best = f64::NEG_INFINITY;
    for i in 0..total {
        let mut rem = i;
        for j in (0..d).rev() {
            x[j] = (rem % per_axis) as f64 / (per_axis - 1) as f64;
            rem /= per_axis;
        }
        best = best.max(f.evaluate(&x));
    }
    best
}

/// Resolution of the midpoint grid used for `d ≥ 3`.
pub fn midpoint_resolution(d: usize) -> usize {
    match d {
        0..=3 => 512,
        _ => ((1u64 << 27) as f64).powf(1.0 / d as f64).floor() as usize,
    }
}

/// Reference `L_f = log ∫_{[0,1]^d} e^f`, computed without the closed forms.
///
/// Adaptive quadrature for `d ≤ 2`, a `512^3` midpoint grid for `d = 3`
/// (coarser per axis for higher `d`).
pub fn log_partition(f: &dyn TargetFunction) -> f64 {
    let d = f.dim();
    let shift = probe_max(f, if d <= 2 { 257 } else { 33 });
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-12,
    };
    let integral = match d {
        1 => integrate(|t| (f.evaluate(&[t]) - shift).exp(), 0.0, 1.0, tol).value,
        2 => {
            let inner_tol = Tolerance {
                abs: 1e-300,
                rel: 1e-13,
            };
            integrate(
                |s| integrate(|t| (f.evaluate(&[s, t]) - shift).exp(), 0.0, 1.0, inner_tol).value,
                0.0,
                1.0,
                tol,
            )
            .value
        }
        _ => midpoint_mean_exp(f, midpoint_resolution(d), shift),
    };
    shift + integral.ln()
}

/// `(1/K^d) Σ exp(f(c_i) − shift)` over the `K^d` cell midpoints.
fn midpoint_mean_exp(f: &dyn TargetFunction, k: usize, shift: f64) -> f64 {
    let d = f.dim();
    let rows = k.pow(d as u32 - 1);
    let row_sums: Vec<f64> = (0..rows)
        .into_par_iter()
        .map_init(
            || (vec![0.0; k * d], vec![0.0; k]),
            |(pts, vals), row| {
                let mut rem = row;
                let mut prefix = vec![0.0; d - 1];
                for j in (0..d - 1).rev() {
                    prefix[j] = ((rem % k) as f64 + 0.5) / k as f64;
                    rem /= k;
                }
                for (i, p) in pts.chunks_exact_mut(d).enumerate() {
                    p[..d - 1].copy_from_slice(&prefix);
                    p[d - 1] = (i as f64 + 0.5) / k as f64;
                }
                f.evaluate_batch(pts, vals);
                vals.iter().map(|v| (v - shift).exp()).sum::<f64>()
            },
        )
        .collect();
    let total: CompensatedSum = row_sums.into_iter().collect();
    total.value() / (k as f64).powi(d as i32)
}
