//! Hyperparameter grid evaluation and baseline size reports.

use std::time::Instant;

use crate::baseline::{entropy, epmd, huffman_build};
use crate::container::write_stream;
use crate::parallel::map_items;
use crate::pipeline::{compress_job, decode_record_levels, encode_levels, CompressJob, Mode};
use crate::quant::{dcv1_lambda_grid, stepsizes_v2, GridRequest, DEFAULT_S_VALUES};
use crate::tensor::WeightTensor;
use crate::{Error, Result};

/// Which step-size family a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Per-layer sigma-derived step sizes indexed by the coarseness S.
    Dcv1,
    /// Global step-size grid with unit importance.
    Dcv2,
}

/// One grid point: exactly one of `s` (dcv1) or `delta` (dcv2) is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub s: Option<u32>,
    pub delta: Option<f64>,
    pub lambda: f64,
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub mode: SweepMode,
    pub point: SweepPoint,
    pub total_bits: u64,
    pub bits_per_weight: f64,
    pub mse: f64,
    pub weighted_mse: f64,
    pub sparsity_fraction: f64,
    pub wall_time_ms: f64,
    /// "ok" or the failure message; failed points keep their row.
    pub status: String,
}

/// Fixed CSV header for sweep reports. `s_or_delta` holds S for dcv1 rows
/// and the step size for dcv2 rows.
pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "mode",
    "s_or_delta",
    "lambda",
    "total_bits",
    "bits_per_weight",
    "mse",
    "weighted_mse",
    "sparsity_fraction",
    "wall_time_ms",
    "status",
];

impl SweepRow {
    pub fn csv_fields(&self) -> Vec<String> {
        let mode = match self.mode {
            SweepMode::Dcv1 => "dcv1",
            SweepMode::Dcv2 => "dcv2",
        };
        let s_or_delta = match (self.point.s, self.point.delta) {
            (Some(s), _) => s.to_string(),
            (None, Some(d)) => format!("{d}"),
            (None, None) => String::new(),
        };
        vec![
            mode.to_string(),
            s_or_delta,
            format!("{}", self.point.lambda),
            self.total_bits.to_string(),
            format!("{}", self.bits_per_weight),
            format!("{}", self.mse),
            format!("{}", self.weighted_mse),
            format!("{}", self.sparsity_fraction),
            format!("{}", self.wall_time_ms),
            self.status.clone(),
        ]
    }
}

/// Expand the grid for a sweep; `None` overrides select the defaults
/// (11 S-values x 100 lambdas for dcv1, 21 lambdas x 102 deltas for dcv2).
pub fn sweep_points(
    mode: SweepMode,
    s_values: Option<&[u32]>,
    lambdas: Option<&[f64]>,
    deltas: Option<&[f64]>,
) -> Vec<SweepPoint> {
    match mode {
        SweepMode::Dcv1 => {
            let s_values = s_values.map_or_else(|| DEFAULT_S_VALUES.to_vec(), <[u32]>::to_vec);
            let lambdas = lambdas.map_or_else(dcv1_lambda_grid, <[f64]>::to_vec);
            let mut points = Vec::with_capacity(s_values.len() * lambdas.len());
            for &s in &s_values {
                for &lambda in &lambdas {
                    points.push(SweepPoint {
                        s: Some(s),
                        delta: None,
                        lambda,
                    });
                }
            }
            points
        }
        SweepMode::Dcv2 => {
            let grids = stepsizes_v2(&GridRequest {
                lambdas: lambdas.map(<[f64]>::to_vec),
                deltas: deltas.map(<[f64]>::to_vec),
            });
            let mut points = Vec::with_capacity(grids.lambdas.len() * grids.deltas.len());
            for &lambda in &grids.lambdas {
                for &delta in &grids.deltas {
                    points.push(SweepPoint {
                        s: None,
                        delta: Some(delta),
                        lambda,
                    });
                }
            }
            points
        }
    }
}

/// Evaluate every grid point over the whole job list. Points run in
/// parallel; per-point failures become rows with a non-"ok" status.
pub fn run_sweep(
    jobs: &[CompressJob],
    mode: SweepMode,
    points: &[SweepPoint],
    n_flags: u32,
) -> Vec<SweepRow> {
    map_items(points.to_vec(), |point| {
        let start = Instant::now();
        match evaluate_point(jobs, mode, &point, n_flags) {
            Ok(mut row) => {
                row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
                row
            }
            Err(e) => SweepRow {
                mode,
                point,
                total_bits: 0,
                bits_per_weight: 0.0,
                mse: 0.0,
                weighted_mse: 0.0,
                sparsity_fraction: 0.0,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                status: e.to_string(),
            },
        }
    })
}

/// Compression mode equivalent to a sweep point.
pub fn point_mode(mode: SweepMode, point: &SweepPoint) -> Result<Mode> {
    match mode {
        SweepMode::Dcv1 => Ok(Mode::Dcv1 {
            s: point
                .s
                .ok_or_else(|| Error::invalid("dcv1 point without S"))?,
            lambda: point.lambda,
        }),
        SweepMode::Dcv2 => Ok(Mode::Dcv2 {
            delta: point
                .delta
                .ok_or_else(|| Error::invalid("dcv2 point without delta"))? as f32,
            lambda: point.lambda,
        }),
    }
}

fn evaluate_point(
    jobs: &[CompressJob],
    mode: SweepMode,
    point: &SweepPoint,
    n_flags: u32,
) -> Result<SweepRow> {
    let cmode = point_mode(mode, point)?;
    let mut records = Vec::with_capacity(jobs.len());
    let mut se_sum = 0.0f64;
    let mut wse_sum = 0.0f64;
    let mut total_weights = 0usize;
    let mut zero_levels = 0usize;
    let mut coded_levels = 0usize;
    for job in jobs {
        let (record, stats) = compress_job(job, &cmode, n_flags)?;
        se_sum += stats.mse * stats.count as f64;
        wse_sum += stats.weighted_mse * stats.count as f64;
        total_weights += stats.count;
        if !job.raw {
            zero_levels += (stats.sparsity * stats.count as f64).round() as usize;
            coded_levels += stats.count;
        }
        records.push(record);
    }
    let stream = write_stream(&records)?;
    let total_bits = stream.len() as u64 * 8;
    let n = total_weights.max(1) as f64;
    Ok(SweepRow {
        mode,
        point: *point,
        total_bits,
        bits_per_weight: total_bits as f64 / n,
        mse: se_sum / n,
        weighted_mse: wse_sum / n,
        sparsity_fraction: zero_levels as f64 / coded_levels.max(1) as f64,
        wall_time_ms: 0.0,
        status: "ok".to_string(),
    })
}

/// Indices of the Pareto frontier of (total_bits, weighted_mse), smallest
/// bits first. Failed rows never make the frontier.
pub fn pareto_frontier(rows: &[SweepRow]) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].status == "ok").collect();
    candidates.sort_by(|&a, &b| {
        rows[a]
            .total_bits
            .cmp(&rows[b].total_bits)
            .then(rows[a].weighted_mse.total_cmp(&rows[b].weighted_mse))
    });
    let mut frontier = Vec::new();
    let mut best_wmse = f64::INFINITY;
    for i in candidates {
        if rows[i].weighted_mse < best_wmse {
            best_wmse = rows[i].weighted_mse;
            frontier.push(i);
        }
    }
    frontier
}

/// Per-tensor sizes of one quantization under the three coders compared in
/// the benchmark reports.
#[derive(Debug, Clone)]
pub struct BaselineRow {
    pub name: String,
    pub count: usize,
    /// Arithmetic-coded payload size.
    pub cabac_bits: u64,
    /// Scalar Huffman, codeword bits only.
    pub huffman_bits: u64,
    /// Scalar Huffman including the serialized code table.
    pub huffman_with_table_bits: u64,
    /// Memoryless lower bound: n * H(EPMD).
    pub entropy_bits: f64,
}

pub const BASELINE_CSV_HEADER: [&str; 9] = [
    "tensor",
    "weights",
    "cabac_bits",
    "huffman_bits",
    "huffman_with_table_bits",
    "entropy_bits",
    "cabac_bits_per_weight",
    "huffman_bits_per_weight",
    "entropy_bits_per_weight",
];

impl BaselineRow {
    pub fn csv_fields(&self) -> Vec<String> {
        let n = self.count.max(1) as f64;
        vec![
            self.name.clone(),
            self.count.to_string(),
            self.cabac_bits.to_string(),
            self.huffman_bits.to_string(),
            self.huffman_with_table_bits.to_string(),
            format!("{}", self.entropy_bits),
            format!("{}", self.cabac_bits as f64 / n),
            format!("{}", self.huffman_bits as f64 / n),
            format!("{}", self.entropy_bits / n),
        ]
    }
}

/// Quantize once under `mode`, then measure the level stream under CABAC,
/// scalar Huffman (with and without its table) and the EPMD entropy bound.
pub fn baseline_report(
    jobs: &[CompressJob],
    mode: &Mode,
    n_flags: u32,
) -> Result<Vec<BaselineRow>> {
    let mut rows = Vec::with_capacity(jobs.len());
    for job in jobs {
        let (record, _) = compress_job(job, mode, n_flags)?;
        let Some(levels) = decode_record_levels(&record)? else {
            continue; // raw tensors carry no levels to compare coders on
        };
        rows.push(baseline_row_for_levels(&job.tensor, &levels, n_flags)?);
    }
    Ok(rows)
}

/// Coder comparison over an explicit level sequence.
pub fn baseline_row_for_levels(
    tensor: &WeightTensor,
    levels: &[i64],
    n_flags: u32,
) -> Result<BaselineRow> {
    let cfg = crate::binarizer::BinarizerConfig::new(
        n_flags,
        crate::binarizer::BinarizerConfig::default().max_golomb_order,
    )?;
    let payload = encode_levels(levels, &cfg)?;
    let hist = epmd(levels)?;
    let code = huffman_build(&hist)?;
    let huffman_bits = code.total_bits(&hist);
    Ok(BaselineRow {
        name: tensor.name.clone(),
        count: levels.len(),
        cabac_bits: payload.len() as u64 * 8,
        huffman_bits,
        huffman_with_table_bits: huffman_bits + code.table_bytes() * 8,
        entropy_bits: entropy(&hist) * levels.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::WeightTensor;

    fn jobs(n_tensors: usize, len: usize) -> Vec<CompressJob> {
        (0..n_tensors)
            .map(|t| {
                let values: Vec<f32> = (0..len)
                    .map(|i| ((i * 7 + t * 13) as f32 * 0.0173).sin() * 0.5)
                    .collect();
                CompressJob {
                    tensor: WeightTensor::new(format!("t{t}"), vec![len], values).unwrap(),
                    importance: None,
                    raw: false,
                }
            })
            .collect()
    }

    #[test]
    fn default_grid_sizes() {
        assert_eq!(sweep_points(SweepMode::Dcv1, None, None, None).len(), 1100);
        assert_eq!(
            sweep_points(SweepMode::Dcv2, None, None, None).len(),
            21 * 102
        );
    }

    #[test]
    fn sweep_rows_cover_every_point() {
        let jobs = jobs(2, 64);
        let points = sweep_points(
            SweepMode::Dcv2,
            None,
            Some(&[0.0, 0.05]),
            Some(&[0.02, 0.1]),
        );
        let rows = run_sweep(&jobs, SweepMode::Dcv2, &points, 10);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.status == "ok"));
        assert!(rows.iter().all(|r| r.total_bits > 0));
    }

    #[test]
    fn failed_points_keep_their_rows() {
        let jobs = jobs(1, 16);
        // dcv1 without importance fails per point but the sweep continues
        let points = sweep_points(SweepMode::Dcv1, Some(&[0, 8]), Some(&[0.0]), None);
        let rows = run_sweep(&jobs, SweepMode::Dcv1, &points, 10);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.status != "ok"));
    }

    #[test]
    fn frontier_is_strictly_improving() {
        let jobs = jobs(1, 512);
        let points = sweep_points(
            SweepMode::Dcv2,
            None,
            Some(&[0.0, 0.01, 0.05]),
            Some(&[0.01, 0.05, 0.2]),
        );
        let rows = run_sweep(&jobs, SweepMode::Dcv2, &points, 10);
        let frontier = pareto_frontier(&rows);
        assert!(!frontier.is_empty());
        for pair in frontier.windows(2) {
            assert!(rows[pair[1]].total_bits >= rows[pair[0]].total_bits);
            assert!(rows[pair[1]].weighted_mse < rows[pair[0]].weighted_mse);
        }
    }

    #[test]
    fn baseline_orderings_on_a_constant_tensor() {
        let t = WeightTensor::new("c", vec![2000], vec![0.5; 2000]).unwrap();
        let row = baseline_row_for_levels(&t, &vec![1i64; 2000], 10).unwrap();
        assert_eq!(row.entropy_bits, 0.0);
        // scalar Huffman cannot go below one bit per weight
        assert!(row.huffman_bits >= 2000);
        // the adaptive coder drops far below one bit per weight
        assert!((row.cabac_bits as f64) < 0.2 * 2000.0);
    }

    #[test]
    fn entropy_never_exceeds_huffman() {
        let jobs = jobs(3, 400);
        let rows = baseline_report(&jobs, &Mode::Uniform { delta: 0.05 }, 10).unwrap();
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert!(row.entropy_bits <= row.huffman_bits as f64 + 1e-9);
            assert!(row.huffman_with_table_bits > row.huffman_bits);
        }
    }
}
