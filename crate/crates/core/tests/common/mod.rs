#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Every cell count within 4 multinomial standard deviations of `n · p`.
pub fn assert_within_4_sigma(counts: &[u64], probs: &[f64]) {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    for (i, (&c, &p)) in counts.iter().zip(probs).enumerate() {
        let mean = n * p;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!(
            (c as f64 - mean).abs() <= 4.0 * sd + 1e-9,
            "cell {i}: count {c}, expected {mean:.1} ± {sd:.1}"
        );
    }
}

/// Upper-tail p-value of Pearson's χ² statistic.
pub fn chi_square_p_value(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64 - n * p).powi(2) / (n * p))
        .sum();
    let dof = (probs.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

/// Lower median (matches the harness convention).
pub fn median(values: &[f64]) -> f64 {
    gibbs_core::numeric::lower_median(values).unwrap()
}
