//! Distances between distributions: exact ones between grid models and
//! empirical ones between sample batches.

mod energy;

use std::fmt;
use std::str::FromStr;

pub use energy::{energy_distance_sq, EnergyReference};

use crate::error::{Error, Result, UnknownIdError};
use crate::grid::GridApproximation;
use crate::numeric::CompensatedSum;

/// `N` points of `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalBatch {
    dim: usize,
    points: Vec<f64>,
    label: String,
}

impl EmpiricalBatch {
    pub fn new(dim: usize, points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates do not form a non-empty batch of {dim}-d points",
                points.len()
            )));
        }
        if let Some(v) = points.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            dim,
            points,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

fn check_same_grid(p: &GridApproximation, q: &GridApproximation) -> Result<()> {
    if p.dim() != q.dim() || p.cells_per_axis() != q.cells_per_axis() {
        return Err(Error::ShapeMismatch(format!(
            "grids {}^{} and {}^{}",
            p.cells_per_axis(),
            p.dim(),
            q.cells_per_axis(),
            q.dim()
        )));
    }
    Ok(())
}

/// `max_i |(p_i − L_p) − (q_i − L_q)|`. Cells where both densities vanish
/// are ignored; a cell where only one vanishes gives `+∞`.
pub fn grid_sup_log(p: &GridApproximation, q: &GridApproximation) -> Result<f64> {
    check_same_grid(p, q)?;
    let (lp, lq) = (p.log_partition(), q.log_partition());
    Ok(p.values()
        .iter()
        .zip(q.values())
        .map(
            |(&a, &b)| match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
                (true, true) => 0.0,
                (false, false) => ((a - lp) - (b - lq)).abs(),
                _ => f64::INFINITY,
            },
        )
        .fold(0.0, f64::max))
}

/// `(1/2) Σ_i |mass_p(i) − mass_q(i)|`.
pub fn grid_tv(p: &GridApproximation, q: &GridApproximation) -> Result<f64> {
    check_same_grid(p, q)?;
    let sum: CompensatedSum = p
        .cell_masses()
        .iter()
        .zip(q.cell_masses())
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok((0.5 * sum.value()).min(1.0))
}

/// `∫_0^1 |F_p − F_q|` for one-dimensional grid models. The CDF difference
/// is linear inside each cell, so every cell contributes in closed form.
pub fn w1_1d(p: &GridApproximation, q: &GridApproximation) -> Result<f64> {
    check_same_grid(p, q)?;
    if p.dim() != 1 {
        return Err(Error::UnsupportedDimension(p.dim()));
    }
    let h = 1.0 / p.cells_per_axis() as f64;
    let mut start = 0.0f64;
    let mut total = CompensatedSum::new();
    for (a, b) in p.cell_masses().iter().zip(q.cell_masses()) {
        let end = start + (a - b);
        let (s, e) = (start.abs(), end.abs());
        total.add(if start * end >= 0.0 {
            0.5 * h * (s + e)
        } else {
            0.5 * h * (s * s + e * e) / (s + e)
        });
        start = end;
    }
    Ok(total.value())
}

/// `(1/2) Σ_i |freq_i − mass_i|` where `freq_i` is the fraction of the batch
/// falling into cell `i` of `reference`.
pub fn cell_histogram_tv(batch: &EmpiricalBatch, reference: &GridApproximation) -> Result<f64> {
    if batch.dim() != reference.dim() {
        return Err(Error::ShapeMismatch(format!(
            "batch of dimension {} against a {}-d grid",
            batch.dim(),
            reference.dim()
        )));
    }
    let mut counts = vec![0u64; reference.num_cells()];
    for x in batch.points().chunks_exact(batch.dim()) {
        counts[reference.cell_index(x)] += 1;
    }
    let n = batch.len() as f64;
    let sum: CompensatedSum = counts
        .iter()
        .zip(reference.cell_masses())
        .map(|(&c, m)| (c as f64 / n - m).abs())
        .collect();
    Ok((0.5 * sum.value()).min(1.0))
}

/// Metrics selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Energy2,
    SupLog,
    Tv,
    W1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Energy2, Metric::SupLog, Metric::Tv, Metric::W1];

    pub fn id(self) -> &'static str {
        match self {
            Metric::Energy2 => "energy2",
            Metric::SupLog => "suplog",
            Metric::Tv => "tv",
            Metric::W1 => "w1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Metric {
    type Err = UnknownIdError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| UnknownIdError {
                registry: "metric",
                id: s.to_owned(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: &[f64]) -> GridApproximation {
        GridApproximation::from_values(1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn two_cell_examples() {
        let p = grid(&[0.0, 0.0]);
        let q = grid(&[0.0, 3f64.ln()]);
        assert!((grid_sup_log(&p, &q).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((grid_tv(&p, &q).unwrap() - 0.25).abs() < 1e-15);
        assert!((w1_1d(&p, &q).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(grid_sup_log(&p, &p).unwrap(), 0.0);
        assert_eq!(w1_1d(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn w1_matches_riemann_sum() {
        let p = grid(&[0.3, -1.0, 2.0, 0.5]);
        let q = grid(&[1.0, 0.0, -0.5, 0.2]);
        let (mp, mq) = (p.cell_masses(), q.cell_masses());
        let cdf = |m: &[f64], x: f64| {
            let k = ((x * 4.0).floor() as usize).min(3);
            m[..k].iter().sum::<f64>() + m[k] * (x * 4.0 - k as f64)
        };
        let steps = 400_000;
        let riemann: f64 = (0..steps)
            .map(|i| {
                let x = (i as f64 + 0.5) / steps as f64;
                (cdf(&mp, x) - cdf(&mq, x)).abs()
            })
            .sum::<f64>()
            / steps as f64;
        assert!((w1_1d(&p, &q).unwrap() - riemann).abs() < 1e-9);
    }

    #[test]
    fn shift_does_not_matter() {
        let p = grid(&[0.1, 0.7, -0.4]);
        let q = grid(&[5.1, 5.7, 4.6]);
        assert!(grid_sup_log(&p, &q).unwrap() < 1e-14);
        assert!(grid_tv(&p, &q).unwrap() < 1e-15);
    }

    #[test]
    fn histogram_examples() {
        let uniform2 = grid(&[0.0, 0.0]);
        let one = EmpiricalBatch::new(1, vec![0.2], "one").unwrap();
        assert_eq!(cell_histogram_tv(&one, &uniform2).unwrap(), 0.5);
        let uniform8 = GridApproximation::from_values(3, 2, vec![0.0; 8]).unwrap();
        let clumped = EmpiricalBatch::new(3, vec![0.1; 30], "clumped").unwrap();
        assert!((cell_histogram_tv(&clumped, &uniform8).unwrap() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let a = grid(&[0.0, 0.0]);
        let b = grid(&[0.0, 0.0, 0.0]);
        assert_eq!(grid_tv(&a, &b).unwrap_err().kind(), "ShapeMismatch");
        let c = GridApproximation::from_values(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(w1_1d(&c, &c), Err(Error::UnsupportedDimension(2))));
        assert!(EmpiricalBatch::new(2, vec![0.1, 0.2, 0.3], "x").is_err());
        assert!(EmpiricalBatch::new(1, vec![1.5], "x").is_err());
    }

    #[test]
    fn metric_ids_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.id().parse::<Metric>().unwrap(), m);
        }
        assert!("kl".parse::<Metric>().is_err());
    }
}
