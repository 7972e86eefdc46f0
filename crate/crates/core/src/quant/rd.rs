//! Rate-distortion quantizer: scans weights in row-major order and, per
//! weight, picks the level minimizing `F_i (w_i - delta*k)^2 + lambda * L_ik`
//! where `L_ik` is the code length estimated from the live context states.
//! The chosen level's bins are committed to the contexts before the scan
//! moves on, so the estimates track exactly what the encoder will later see.

use crate::binarizer::{commit_level, estimate_level_units, BinarizerConfig, ContextSet};
use crate::cabac::PROB_ONE;
use crate::quant::uniform::nearest_level;
use crate::tensor::{ImportanceMap, QuantGrid, WeightTensor};
use crate::{Error, Result};

/// Candidate levels straddle the nearest-neighbor level by this much; level 0
/// is always a candidate as well.
pub const WINDOW_RADIUS: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdHyperParams {
    /// Rate weight; 0 reduces to nearest-neighbor assignment.
    pub lambda: f64,
    /// Quantization step size.
    pub delta: f32,
    /// AbsGr flag count used for both rate estimates and the later encode.
    pub n_flags: u32,
}

impl RdHyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

pub fn rd_quantize(
    tensor: &WeightTensor,
    importance: Option<&ImportanceMap>,
    hp: &RdHyperParams,
    cfg: &BinarizerConfig,
    ctxs: &mut ContextSet,
) -> Result<QuantGrid> {
    hp.validate()?;
    if let Some(f) = importance {
        f.check_aligned(tensor)?;
    }
    let delta = hp.delta as f64;
    let mut levels = Vec::with_capacity(tensor.len());
    let mut prev_significant = false;
    for (i, &w) in tensor.values.iter().enumerate() {
        let f_i = importance.map_or(1.0, |f| f.values()[i]);
        let chosen = choose_level(w, f_i, delta, hp.lambda, cfg, ctxs, prev_significant)?;
        commit_level(ctxs, chosen, cfg, prev_significant)?;
        prev_significant = chosen != 0;
        levels.push(chosen);
    }
    Ok(QuantGrid {
        delta: hp.delta,
        levels,
    })
}

/// Score the candidate window around the nearest level (plus zero) against
/// frozen context states and return the argmin. Ties prefer the smaller
/// |level|, then the smaller level; candidates are visited in that order so
/// a strict comparison implements the rule.
fn choose_level(
    w: f32,
    f_i: f64,
    delta: f64,
    lambda: f64,
    cfg: &BinarizerConfig,
    ctxs: &ContextSet,
    prev_significant: bool,
) -> Result<i64> {
    let center = nearest_level(w, delta as f32);
    let mut candidates: Vec<i64> = (center - WINDOW_RADIUS..=center + WINDOW_RADIUS).collect();
    if !candidates.contains(&0) {
        candidates.push(0);
    }
    candidates.sort_by_key(|&k| (k.abs(), k));

    let mut best = None;
    let mut best_score = f64::INFINITY;
    for &k in &candidates {
        let units = match estimate_level_units(ctxs, k, cfg, prev_significant) {
            Ok(u) => u,
            // candidates outside the representable range just drop out,
            // unless none is representable at all
            Err(Error::LevelRange(_)) => continue,
            Err(e) => return Err(e),
        };
        let err = w as f64 - delta * k as f64;
        let score = f_i * err * err + lambda * (units as f64 / PROB_ONE as f64);
        if score < best_score {
            best = Some(k);
            best_score = score;
        }
    }
    best.ok_or(Error::LevelRange(center))
}
