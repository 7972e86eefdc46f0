//! Nearest-neighbor quantization onto an equidistant grid and distortion
//! metrics.

use crate::tensor::{ImportanceMap, QuantGrid, WeightTensor};
use crate::{Error, Result};

/// `level_i = round(w_i / delta)` with ties rounded away from zero.
pub fn uniform_quantize(tensor: &WeightTensor, delta: f32) -> Result<QuantGrid> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!(
            "step size must be positive and finite, got {delta}"
        )));
    }
    let levels = tensor
        .values
        .iter()
        .map(|&w| nearest_level(w, delta))
        .collect();
    Ok(QuantGrid { delta, levels })
}

/// Nearest grid level of one weight, ties away from zero.
pub(crate) fn nearest_level(w: f32, delta: f32) -> i64 {
    // f64 division keeps the quotient exact enough that the f32 tie cases
    // land exactly on .5; f64::round breaks ties away from zero.
    (w as f64 / delta as f64).round() as i64
}

/// `(mse, weighted_mse)` between a tensor and a reconstruction.
pub fn distortion(
    original: &WeightTensor,
    recon: &[f32],
    importance: Option<&ImportanceMap>,
) -> Result<(f64, f64)> {
    if recon.len() != original.len() {
        return Err(Error::invalid(format!(
            "reconstruction has {} values, tensor '{}' has {}",
            recon.len(),
            original.name,
            original.len()
        )));
    }
    if let Some(f) = importance {
        f.check_aligned(original)?;
    }
    if original.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut se = 0.0f64;
    let mut wse = 0.0f64;
    for (i, (&w, &q)) in original.values.iter().zip(recon).enumerate() {
        let d = (w as f64 - q as f64) * (w as f64 - q as f64);
        se += d;
        wse += d * importance.map_or(1.0, |f| f.values()[i]);
    }
    let n = original.len() as f64;
    Ok((se / n, wse / n))
}
