//! Per-tensor compress/decompress: quantizer selection, level coding, record
//! assembly. Context models are freshly initialized for every tensor record,
//! so distinct tensors encode and decode independently (and in parallel).

use crate::binarizer::{decode_level, encode_level, BinarizerConfig, ContextSet};
use crate::cabac::{Decoder, Encoder};
use crate::container::{RecordPayload, TensorRecord};
use crate::parallel::map_items;
use crate::quant::{
    distortion, lloyd_quantize, rd_quantize, stepsizes_v1, uniform_quantize, RdHyperParams,
};
use crate::tensor::{ImportanceMap, QuantGrid, WeightTensor};
use crate::{Error, Result};

/// One tensor to compress, with its optional importance map.
#[derive(Debug, Clone)]
pub struct CompressJob {
    pub tensor: WeightTensor,
    pub importance: Option<ImportanceMap>,
    /// Pass through uncompressed (biases and other non-weight parameters).
    pub raw: bool,
}

/// Quantizer selection for a compression run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Nearest-neighbor onto a fixed grid.
    Uniform { delta: f32 },
    /// Rate-distortion assignment with per-layer sigma-derived step sizes.
    Dcv1 { s: u32, lambda: f64 },
    /// Rate-distortion assignment with one global step size, unit importance.
    Dcv2 { delta: f32, lambda: f64 },
    /// Importance-weighted Lloyd clustering; levels index a codebook.
    Lloyd { clusters: usize, lambda: f64 },
}

/// Per-tensor outcome of a compression run.
#[derive(Debug, Clone)]
pub struct TensorStats {
    pub name: String,
    pub count: usize,
    /// Serialized record size, container overhead included.
    pub record_bytes: usize,
    pub bits_per_weight: f64,
    pub mse: f64,
    pub weighted_mse: f64,
    pub sparsity: f64,
    /// Lloyd only: clusters actually used, when fewer than requested.
    pub reduced_clusters: Option<usize>,
}

/// Entropy-code a level sequence with fresh contexts.
pub fn encode_levels(levels: &[i64], cfg: &BinarizerConfig) -> Result<Vec<u8>> {
    let mut ctxs = ContextSet::new(cfg);
    let mut enc = Encoder::new();
    let mut prev_significant = false;
    for &level in levels {
        encode_level(&mut enc, &mut ctxs, level, cfg, prev_significant)?;
        prev_significant = level != 0;
    }
    Ok(enc.finish())
}

/// Decode exactly `count` levels from a payload produced by [`encode_levels`].
pub fn decode_levels(payload: &[u8], count: usize, cfg: &BinarizerConfig) -> Result<Vec<i64>> {
    let mut ctxs = ContextSet::new(cfg);
    let mut dec = Decoder::new(payload)?;
    let mut levels = Vec::with_capacity(count);
    let mut prev_significant = false;
    for _ in 0..count {
        let level = decode_level(&mut dec, &mut ctxs, cfg, prev_significant)?;
        prev_significant = level != 0;
        levels.push(level);
    }
    Ok(levels)
}

/// Compress one tensor under `mode`. Raw jobs bypass quantization entirely.
pub fn compress_job(job: &CompressJob, mode: &Mode, n_flags: u32) -> Result<(TensorRecord, TensorStats)> {
    let tensor = &job.tensor;
    if job.raw {
        let record = TensorRecord {
            name: tensor.name.clone(),
            shape: tensor.shape.clone(),
            payload: RecordPayload::Raw {
                values: tensor.values.clone(),
            },
        };
        let stats = stats_for(tensor, job.importance.as_ref(), &record, &tensor.values, 0.0, None)?;
        return Ok((record, stats));
    }

    let cfg = BinarizerConfig::new(n_flags, BinarizerConfig::default().max_golomb_order)?;
    match mode {
        Mode::Uniform { delta } => {
            let grid = uniform_quantize(tensor, *delta)?;
            quantized_record(job, &grid, &cfg)
        }
        Mode::Dcv2 { delta, lambda } => {
            // unit importance by construction; the importance file, if any,
            // only influences reporting
            let hp = RdHyperParams {
                lambda: *lambda,
                delta: *delta,
                n_flags,
            };
            let mut ctxs = ContextSet::new(&cfg);
            let grid = rd_quantize(tensor, None, &hp, &cfg, &mut ctxs)?;
            quantized_record(job, &grid, &cfg)
        }
        Mode::Dcv1 { s, lambda } => {
            let importance = job.importance.as_ref().ok_or_else(|| {
                Error::invalid(format!(
                    "tensor '{}': dcv1 requires importance or sigma inputs",
                    tensor.name
                ))
            })?;
            importance.check_aligned(tensor)?;
            let sigma_min = importance.sigma_min();
            let w_max = tensor.max_abs() as f64;
            let delta = if w_max > 0.0 {
                stepsizes_v1(w_max, sigma_min, &[*s])?[0]
            } else {
                sigma_min // all-zero tensor: any grid works, levels are all 0
            } as f32;
            let hp = RdHyperParams {
                lambda: *lambda,
                delta,
                n_flags,
            };
            let mut ctxs = ContextSet::new(&cfg);
            let grid = rd_quantize(tensor, Some(importance), &hp, &cfg, &mut ctxs)?;
            quantized_record(job, &grid, &cfg)
        }
        Mode::Lloyd { clusters, lambda } => {
            let result = lloyd_quantize(
                &tensor.values,
                job.importance.as_ref(),
                *clusters,
                *lambda,
            )?;
            let (centers, zero_index, levels) = codebook_levels(&result.centers, &result.assignments);
            let payload = encode_levels(&levels, &cfg)?;
            let record = TensorRecord {
                name: tensor.name.clone(),
                shape: tensor.shape.clone(),
                payload: RecordPayload::Codebook {
                    centers,
                    zero_index,
                    n_flags: n_flags as u8,
                    payload,
                },
            };
            let recon = decode_record(&record)?;
            let sparsity = if levels.is_empty() {
                0.0
            } else {
                levels.iter().filter(|&&l| l == 0).count() as f64 / levels.len() as f64
            };
            let reduced = (result.effective_k < *clusters).then_some(result.effective_k);
            let stats = stats_for(tensor, job.importance.as_ref(), &record, &recon, sparsity, reduced)?;
            Ok((record, stats))
        }
    }
}

/// Compress every job; tensors fan out in parallel, output order is input
/// order.
pub fn compress_jobs(
    jobs: Vec<CompressJob>,
    mode: &Mode,
    n_flags: u32,
) -> Result<(Vec<TensorRecord>, Vec<TensorStats>)> {
    let results = map_items(jobs, |job| compress_job(&job, mode, n_flags));
    let mut records = Vec::with_capacity(results.len());
    let mut stats = Vec::with_capacity(results.len());
    for r in results {
        let (record, stat) = r?;
        records.push(record);
        stats.push(stat);
    }
    Ok((records, stats))
}

/// Reconstruct the values a record encodes.
pub fn decode_record(record: &TensorRecord) -> Result<Vec<f32>> {
    let count = record.element_count();
    match &record.payload {
        RecordPayload::Raw { values } => Ok(values.clone()),
        RecordPayload::Quantized {
            delta,
            n_flags,
            payload,
        } => {
            let cfg = record_config(*n_flags)?;
            let levels = decode_levels_named(payload, count, &cfg, &record.name)?;
            Ok(levels.iter().map(|&l| delta * l as f32).collect())
        }
        RecordPayload::Codebook {
            centers,
            zero_index,
            n_flags,
            payload,
        } => {
            let cfg = record_config(*n_flags)?;
            let levels = decode_levels_named(payload, count, &cfg, &record.name)?;
            levels
                .iter()
                .map(|&l| {
                    let idx = *zero_index as i64 + l;
                    centers
                        .get(usize::try_from(idx).map_err(|_| bad_index(&record.name, idx))?)
                        .copied()
                        .ok_or_else(|| bad_index(&record.name, idx))
                })
                .collect()
        }
    }
}

/// The coded integer levels of a record, if it has any (raw records do not).
pub fn decode_record_levels(record: &TensorRecord) -> Result<Option<Vec<i64>>> {
    let count = record.element_count();
    match &record.payload {
        RecordPayload::Raw { .. } => Ok(None),
        RecordPayload::Quantized {
            n_flags, payload, ..
        }
        | RecordPayload::Codebook {
            n_flags, payload, ..
        } => {
            let cfg = record_config(*n_flags)?;
            Ok(Some(decode_levels_named(payload, count, &cfg, &record.name)?))
        }
    }
}

/// Serialized size of one record inside a stream, in bytes.
pub fn record_byte_size(record: &TensorRecord) -> usize {
    let common = 4 + record.name.len() + 1 + 4 + 4 * record.shape.len();
    common
        + match &record.payload {
            RecordPayload::Quantized { payload, .. } => 4 + 1 + 4 + payload.len(),
            RecordPayload::Raw { values } => 4 * values.len(),
            RecordPayload::Codebook {
                centers, payload, ..
            } => 4 + 4 + 4 * centers.len() + 1 + 4 + payload.len(),
        }
}

fn record_config(n_flags: u8) -> Result<BinarizerConfig> {
    BinarizerConfig::new(
        n_flags as u32,
        BinarizerConfig::default().max_golomb_order,
    )
}

fn decode_levels_named(
    payload: &[u8],
    count: usize,
    cfg: &BinarizerConfig,
    name: &str,
) -> Result<Vec<i64>> {
    decode_levels(payload, count, cfg).map_err(|e| match e {
        Error::TruncatedStream(msg) => Error::truncated(format!("tensor '{name}': {msg}")),
        Error::CorruptStream(msg) => Error::corrupt(format!("tensor '{name}': {msg}")),
        other => other,
    })
}

fn bad_index(name: &str, idx: i64) -> Error {
    Error::corrupt(format!("tensor '{name}': codebook index {idx} out of range"))
}

fn quantized_record(
    job: &CompressJob,
    grid: &QuantGrid,
    cfg: &BinarizerConfig,
) -> Result<(TensorRecord, TensorStats)> {
    let payload = encode_levels(&grid.levels, cfg)?;
    let record = TensorRecord {
        name: job.tensor.name.clone(),
        shape: job.tensor.shape.clone(),
        payload: RecordPayload::Quantized {
            delta: grid.delta,
            n_flags: cfg.n_flags as u8,
            payload,
        },
    };
    let recon = grid.dequantize();
    let stats = stats_for(
        &job.tensor,
        job.importance.as_ref(),
        &record,
        &recon,
        grid.sparsity(),
        None,
    )?;
    Ok((record, stats))
}

fn stats_for(
    tensor: &WeightTensor,
    importance: Option<&ImportanceMap>,
    record: &TensorRecord,
    recon: &[f32],
    sparsity: f64,
    reduced_clusters: Option<usize>,
) -> Result<TensorStats> {
    let (mse, weighted_mse) = distortion(tensor, recon, importance)?;
    let record_bytes = record_byte_size(record);
    let bits_per_weight = if tensor.is_empty() {
        0.0
    } else {
        record_bytes as f64 * 8.0 / tensor.len() as f64
    };
    Ok(TensorStats {
        name: tensor.name.clone(),
        count: tensor.len(),
        record_bytes,
        bits_per_weight,
        mse,
        weighted_mse,
        sparsity,
        reduced_clusters,
    })
}

/// Sorted codebook, its zero position, and per-weight signed index offsets.
fn codebook_levels(centers: &[f64], assignments: &[u32]) -> (Vec<f32>, u32, Vec<i64>) {
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let mut position = vec![0usize; centers.len()];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        position[old_idx] = new_idx;
    }
    let sorted: Vec<f32> = order.iter().map(|&i| centers[i] as f32).collect();
    let zero_index = sorted
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0) as u32;
    let levels = assignments
        .iter()
        .map(|&a| position[a as usize] as i64 - zero_index as i64)
        .collect();
    (sorted, zero_index, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(values: Vec<f32>) -> CompressJob {
        let n = values.len();
        CompressJob {
            tensor: WeightTensor::new("t", vec![n], values).unwrap(),
            importance: None,
            raw: false,
        }
    }

    #[test]
    fn level_coding_roundtrip() {
        let cfg = BinarizerConfig::default();
        let levels: Vec<i64> = vec![0, 0, 3, -7, 0, 120, -1, 0, 0, 0, 44];
        let payload = encode_levels(&levels, &cfg).unwrap();
        assert_eq!(decode_levels(&payload, levels.len(), &cfg).unwrap(), levels);
    }

    #[test]
    fn uniform_compress_decode_is_delta_times_level() {
        let j = job(vec![0.14, -0.06, 0.0, 0.31, 2.0]);
        let (record, stats) = compress_job(&j, &Mode::Uniform { delta: 0.1 }, 10).unwrap();
        let recon = decode_record(&record).unwrap();
        assert_eq!(recon, vec![0.1f32 * 1.0, -0.1, 0.0, 0.1 * 3.0, 0.1 * 20.0]);
        assert!(stats.mse > 0.0);
        assert_eq!(stats.count, 5);
    }

    #[test]
    fn dcv2_lambda_zero_matches_uniform_records() {
        let values: Vec<f32> = (0..300).map(|i| ((i * i) as f32 * 0.37).sin()).collect();
        let j = job(values);
        let (a, _) = compress_job(&j, &Mode::Uniform { delta: 0.04 }, 10).unwrap();
        let (b, _) = compress_job(
            &j,
            &Mode::Dcv2 {
                delta: 0.04,
                lambda: 0.0,
            },
            10,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn raw_jobs_pass_through_bit_exactly() {
        let mut j = job(vec![1.5, -2.25, 0.0078125]);
        j.raw = true;
        let (record, stats) = compress_job(&j, &Mode::Uniform { delta: 1.0 }, 10).unwrap();
        assert_eq!(decode_record(&record).unwrap(), j.tensor.values);
        assert_eq!(stats.mse, 0.0);
        assert!(decode_record_levels(&record).unwrap().is_none());
    }

    #[test]
    fn lloyd_mode_roundtrips_through_codebook() {
        let values: Vec<f32> = (0..200)
            .map(|i| match i % 4 {
                0 => 0.0,
                1 => 1.0,
                2 => -1.0,
                _ => 0.5,
            })
            .collect();
        let j = job(values.clone());
        let (record, stats) = compress_job(
            &j,
            &Mode::Lloyd {
                clusters: 4,
                lambda: 0.0,
            },
            10,
        )
        .unwrap();
        let recon = decode_record(&record).unwrap();
        // exact clustering: every reconstruction hits a center equal to the value
        for (w, q) in values.iter().zip(&recon) {
            assert!((w - q).abs() < 1e-6, "{w} vs {q}");
        }
        assert!(stats.reduced_clusters.is_none());
    }

    #[test]
    fn parallel_and_sequential_compression_agree() {
        let jobs: Vec<CompressJob> = (0..8)
            .map(|t| {
                let values: Vec<f32> =
                    (0..500).map(|i| ((i + t * 131) as f32 * 0.011).sin()).collect();
                CompressJob {
                    tensor: WeightTensor::new(format!("t{t}"), vec![500], values).unwrap(),
                    importance: None,
                    raw: false,
                }
            })
            .collect();
        let mode = Mode::Dcv2 {
            delta: 0.02,
            lambda: 0.05,
        };
        let (par, _) = compress_jobs(jobs.clone(), &mode, 10).unwrap();
        let seq: Vec<TensorRecord> = jobs
            .iter()
            .map(|j| compress_job(j, &mode, 10).unwrap().0)
            .collect();
        assert_eq!(par, seq);
    }

    #[test]
    fn dcv1_needs_importance() {
        let j = job(vec![0.5, -0.5]);
        assert!(matches!(
            compress_job(&j, &Mode::Dcv1 { s: 0, lambda: 0.0 }, 10),
            Err(Error::InvalidInput(_))
        ));
        let with_f = CompressJob {
            importance: Some(ImportanceMap::new(vec![1.0, 4.0]).unwrap()),
            ..j
        };
        let (record, _) = compress_job(&with_f, &Mode::Dcv1 { s: 16, lambda: 0.001 }, 10).unwrap();
        assert!(decode_record(&record).is_ok());
    }

    #[test]
    fn record_byte_size_matches_serialization() {
        let j = job(vec![0.3; 64]);
        for mode in [
            Mode::Uniform { delta: 0.1 },
            Mode::Lloyd {
                clusters: 3,
                lambda: 0.1,
            },
        ] {
            let (record, _) = compress_job(&j, &mode, 4).unwrap();
            let stream = crate::container::write_stream(std::slice::from_ref(&record)).unwrap();
            assert_eq!(stream.len() - 10, record_byte_size(&record));
        }
    }
}
