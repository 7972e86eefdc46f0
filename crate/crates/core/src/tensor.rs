//! Domain types shared by the quantizers and the container.

use crate::{Error, Result};

/// A named flat weight tensor (row-major 32-bit reals).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

impl WeightTensor {
    /// Validates that the shape covers the values and that every value is
    /// finite; NaN or infinite weights are not admitted.
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::invalid(format!(
                "tensor '{name}': shape {shape:?} holds {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "tensor '{name}': non-finite value at index {bad}"
            )));
        }
        Ok(Self {
            name,
            shape,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest absolute weight, 0.0 for an empty tensor.
    pub fn max_abs(&self) -> f32 {
        self.values.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

/// Per-weight nonnegative importance values aligned 1:1 with a tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMap {
    values: Vec<f64>,
}

impl ImportanceMap {
    /// All entries must be nonnegative and finite, with at least one
    /// strictly positive.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::invalid(
                "importance values must be finite and nonnegative",
            ));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::invalid(
                "importance map must contain a positive entry",
            ));
        }
        Ok(Self { values })
    }

    /// Interpret per-weight standard deviations as importance `1/sigma^2`,
    /// flooring sigma at 1e-8.
    pub fn from_sigmas(sigmas: &[f64]) -> Result<Self> {
        let values = sigmas
            .iter()
            .map(|&s| {
                let s = s.max(1e-8);
                1.0 / (s * s)
            })
            .collect();
        Self::new(values)
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            values: vec![1.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Error unless the map is aligned with `tensor`.
    pub fn check_aligned(&self, tensor: &WeightTensor) -> Result<()> {
        if self.values.len() != tensor.len() {
            return Err(Error::invalid(format!(
                "importance map has {} entries, tensor '{}' has {}",
                self.values.len(),
                tensor.name,
                tensor.len()
            )));
        }
        Ok(())
    }

    /// Smallest sigma implied by the map (`1/sqrt(max F)`).
    pub fn sigma_min(&self) -> f64 {
        let f_max = self.values.iter().cloned().fold(0.0f64, f64::max);
        1.0 / f_max.sqrt()
    }
}

/// An equidistant quantization of one tensor: `q_i = delta * level_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantGrid {
    pub delta: f32,
    pub levels: Vec<i64>,
}

impl QuantGrid {
    /// Reconstruction in 32-bit arithmetic, bit-exact with the container.
    pub fn dequantize(&self) -> Vec<f32> {
        self.levels
            .iter()
            .map(|&l| self.delta * l as f32)
            .collect()
    }

    /// Fraction of zero levels.
    pub fn sparsity(&self) -> f64 {
        if self.levels.is_empty() {
            return 0.0;
        }
        self.levels.iter().filter(|&&l| l == 0).count() as f64 / self.levels.len() as f64
    }
}
