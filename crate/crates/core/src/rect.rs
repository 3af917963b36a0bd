use crate::error::{Error, Result};

/// Axis-aligned box `⨉ [lower_j, lower_j + size_j]` inside the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    lower: Vec<f64>,
    size: Vec<f64>,
}

impl Hyperrectangle {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            size: vec![1.0; dim],
        }
    }

    pub fn new(lower: Vec<f64>, size: Vec<f64>) -> Result<Self> {
        if lower.len() != size.len() || lower.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "lower has {} axes, size has {}",
                lower.len(),
                size.len()
            )));
        }
        for (j, (&l, &h)) in lower.iter().zip(&size).enumerate() {
            if !(l >= 0.0 && h > 0.0 && l + h <= 1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "axis {j}: [{l}, {l} + {h}] is not a nondegenerate subinterval of [0, 1]"
                )));
            }
        }
        Ok(Self { lower, size })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn size(&self) -> &[f64] {
        &self.size
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    /// Maps `u ∈ [0,1]^d` to `lower + size ∘ u`.
    #[inline]
    pub fn map_into(&self, u: &[f64], out: &mut [f64]) {
        for j in 0..self.lower.len() {
            out[j] = self.lower[j] + self.size[j] * u[j];
        }
    }

    /// Splits along `axis` into lower and upper halves.
    pub fn bisect(&self, axis: usize) -> (Self, Self) {
        let half = self.size[axis] / 2.0;
        let mut first = self.clone();
        first.size[axis] = half;
        let mut second = first.clone();
        second.lower[axis] = self.lower[axis] + half;
        (first, second)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.size))
            .all(|(&xi, (&l, &h))| xi >= l && xi <= l + h)
    }
}
