//! Log-space arithmetic and small statistics helpers.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `log Σ exp(v_i)` with max subtraction. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: CompensatedSum = values.iter().map(|v| (v - max).exp()).collect();
    max + s.value().ln()
}

#[inline(always)]
fn exp_shifted_body(values: &[f64], shift: f64, out: &mut [f64]) {
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // 1.5 · 2^52: adding it rounds to an integer held in the low mantissa bits.
    const ROUND: f64 = 6_755_399_441_055_744.0;
    const FLOOR: f64 = -708.0;
    const TAYLOR: [f64; 13] = [
        1.0 / 479_001_600.0,
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ];
    for (o, &v) in out.iter_mut().zip(values) {
        let x = v - shift;
        let keep = x >= FLOOR;
        let xc = if keep { x } else { FLOOR };
        let t = xc * std::f64::consts::LOG2_E + ROUND;
        let k = t - ROUND;
        let r = (xc - k * LN2_HI) - k * LN2_LO;
        let mut p = 1.0 / 6_227_020_800.0;
        for c in TAYLOR {
            p = p * r + c;
        }
        let scale = f64::from_bits(t.to_bits().wrapping_add(1023) << 52);
        *o = if keep { p * scale } else { 0.0 };
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn exp_shifted_avx2(values: &[f64], shift: f64, out: &mut [f64]) {
    exp_shifted_body(values, shift, out)
}

/// `out[i] = exp(values[i] − shift)` for `values[i] ≤ shift`, written so
/// the loop vectorizes: Cody-Waite reduction to `|r| ≤ ln 2 / 2` and a
/// degree-13 Taylor polynomial. Relative error is within a few ulps of
/// `f64::exp`; results below `e^{-708}` flush to zero. Every code path
/// performs the same operations, so output is identical across CPUs.
pub fn exp_shifted_into(values: &[f64], shift: f64, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU feature was detected at runtime.
        return unsafe { exp_shifted_avx2(values, shift, out) };
    }
    exp_shifted_body(values, shift, out)
}

/// Largest element and plain sum, accumulated in eight fixed lanes so the
/// loop vectorizes; the lane order is fixed, so the result is deterministic.
pub fn max_and_sum(values: &[f64]) -> (f64, f64) {
    const LANES: usize = 8;
    let mut mx = [f64::NEG_INFINITY; LANES];
    let mut sm = [0.0; LANES];
    let chunks = values.chunks_exact(LANES);
    let tail = chunks.remainder();
    for c in chunks {
        for j in 0..LANES {
            mx[j] = if c[j] > mx[j] { c[j] } else { mx[j] };
            sm[j] += c[j];
        }
    }
    let mut m = mx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s: f64 = sm.iter().sum();
    for &v in tail {
        m = m.max(v);
        s += v;
    }
    (m, s)
}

/// Streaming `log Σ exp(v_i)`: keeps a running maximum and a compensated
/// sum of `exp(v_i − max)`, rescaling the sum when the maximum grows.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExpAcc {
    max: f64,
    sum: CompensatedSum,
    count: u64,
}

impl Default for LogSumExpAcc {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: CompensatedSum::new(),
            count: 0,
        }
    }
}

impl LogSumExpAcc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds in a chunk of terms with one rescale at most.
    pub fn add_slice(&mut self, values: &[f64]) {
        self.count += values.len() as u64;
        let chunk_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if chunk_max == f64::NEG_INFINITY {
            return;
        }
        if chunk_max > self.max {
            if self.max > f64::NEG_INFINITY {
                let scale = (self.max - chunk_max).exp();
                let old = self.sum.value();
                self.sum = CompensatedSum::new();
                self.sum.add(old * scale);
            }
            self.max = chunk_max;
        }
        for v in values {
            self.sum.add((v - self.max).exp());
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `log((1/count) Σ exp(v_i))`, exact for constant inputs.
    pub fn log_mean(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.max + (self.sum.value() / self.count as f64).ln()
    }

    /// `log Σ exp(v_i)`; `-inf` when nothing (or only `-inf`) was added.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.max + self.sum.value().ln()
    }
}

/// `log((1/n) Σ exp(v_i))`. Dividing before the logarithm keeps the
/// result exact when all values are equal.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let mut acc = LogSumExpAcc::new();
    acc.add_slice(values);
    acc.log_mean()
}

/// Logistic sigmoid `1 / (1 + e^{-u})`, stable for large `|u|`.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Lower median: element `(len - 1) / 2` of the sorted values.
/// NaNs sort last. Returns `None` for an empty slice.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Least-squares slope of `log y` against `log x`. Pairs with non-positive
/// or non-finite coordinates are skipped. `None` if fewer than two remain.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Largest `k` with `k^d <= n`, computed exactly in integers.
pub fn integer_root(n: u64, d: usize) -> u64 {
    if d == 1 || n <= 1 {
        return n;
    }
    let pow = |k: u64| -> Option<u64> {
        let mut acc: u64 = 1;
        for _ in 0..d {
            acc = acc.checked_mul(k)?;
        }
        Some(acc)
    };
    let mut k = (n as f64).powf(1.0 / d as f64).round() as u64;
    while k > 0 && pow(k).is_none_or(|p| p > n) {
        k -= 1;
    }
    while pow(k + 1).is_some_and(|p| p <= n) {
        k += 1;
    }
    k
}

/// `k^d`, saturating at `u64::MAX`.
pub fn int_pow(k: u64, d: usize) -> u64 {
    (0..d).fold(1u64, |acc, _| acc.saturating_mul(k))
}
