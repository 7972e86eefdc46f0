//! Importance-weighted Lloyd clustering with an entropy rate term and a
//! forced zero center.
//!
//! Each round assigns every weight to the cluster minimizing
//! `F_i (w_i - C_j)^2 - lambda * log2(P_j)` (empty clusters are excluded:
//! their probability mass is zero), recomputes importance-weighted centroids
//! and cluster probabilities, and then snaps the center of smallest magnitude
//! to exactly zero. Iteration stops when the loss stops improving.

use crate::tensor::ImportanceMap;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 300;
const RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LloydResult {
    /// Cluster centers; exactly one is 0.0.
    pub centers: Vec<f64>,
    /// Cluster index per weight.
    pub assignments: Vec<u32>,
    /// Loss after each iteration; non-increasing.
    pub loss_history: Vec<f64>,
    /// Number of clusters actually used. Smaller than the requested count
    /// when the input has fewer distinct values.
    pub effective_k: usize,
}

pub fn lloyd_quantize(
    weights: &[f32],
    importance: Option<&ImportanceMap>,
    k: usize,
    lambda: f64,
) -> Result<LloydResult> {
    if weights.is_empty() {
        return Err(Error::invalid("cannot cluster an empty weight sequence"));
    }
    if k < 2 {
        return Err(Error::invalid("cluster count must be at least 2"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("weights must be finite"));
    }
    let f: Vec<f64> = match importance {
        Some(map) => {
            if map.len() != weights.len() {
                return Err(Error::invalid(format!(
                    "importance map has {} entries for {} weights",
                    map.len(),
                    weights.len()
                )));
            }
            map.values().to_vec()
        }
        None => vec![1.0; weights.len()],
    };
    let w: Vec<f64> = weights.iter().map(|&x| x as f64).collect();

    let mut distinct: Vec<f64> = w.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    // distinct values plus the forced zero center is all the state that can
    // ever be populated; a larger K only produces dead clusters
    let effective_k = k.min(distinct.len() + 1);

    let mut state = State::init(&w, effective_k);
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let candidate = state.step(&w, &f, lambda);
        match history.last() {
            Some(&last) if candidate.loss > last => break, // zero-enforcement can't improve further
            _ => {}
        }
        let converged = history
            .last()
            .is_some_and(|&last: &f64| last - candidate.loss < RELATIVE_TOLERANCE * last.abs().max(1.0));
        history.push(candidate.loss);
        state = candidate;
        if converged {
            break;
        }
    }

    Ok(LloydResult {
        centers: state.centers,
        assignments: state.assignments,
        loss_history: history,
        effective_k,
    })
}

#[derive(Debug, Clone)]
struct State {
    centers: Vec<f64>,
    probs: Vec<f64>,
    assignments: Vec<u32>,
    loss: f64,
}

impl State {
    fn init(w: &[f64], k: usize) -> Self {
        let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let centers: Vec<f64> = if hi > lo {
            (0..k)
                .map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64)
                .collect()
        } else {
            // degenerate input: the value itself plus the forced zero center
            let mut c = vec![lo; k];
            c[0] = 0.0;
            c
        };
        Self {
            centers,
            probs: vec![1.0 / k as f64; k],
            assignments: vec![0; w.len()],
            loss: f64::INFINITY,
        }
    }

    /// One full round: assign, update centroids and probabilities, enforce
    /// the zero center, evaluate the loss.
    fn step(&self, w: &[f64], f: &[f64], lambda: f64) -> State {
        let k = self.centers.len();
        let assignments = assign(w, f, &self.centers, &self.probs, lambda);

        let mut centers = self.centers.clone();
        let mut weight_sum = vec![0.0f64; k];
        let mut value_sum = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            let j = a as usize;
            weight_sum[j] += f[i];
            value_sum[j] += f[i] * w[i];
            counts[j] += 1;
        }
        for j in 0..k {
            if counts[j] == 0 {
                continue; // empty cluster keeps its center; excluded by P_j = 0
            }
            if weight_sum[j] > 0.0 {
                centers[j] = value_sum[j] / weight_sum[j];
            } else {
                // all members carry zero importance: plain mean
                let (mut s, mut c) = (0.0, 0usize);
                for (i, &a) in assignments.iter().enumerate() {
                    if a as usize == j {
                        s += w[i];
                        c += 1;
                    }
                }
                centers[j] = s / c as f64;
            }
        }
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / w.len() as f64).collect();

        // enforce the zero cluster on the center of smallest magnitude
        let zero_idx = centers
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
            .map(|(j, _)| j)
            .unwrap();
        centers[zero_idx] = 0.0;

        let mut loss = 0.0;
        for (i, &a) in assignments.iter().enumerate() {
            let j = a as usize;
            let d = w[i] - centers[j];
            loss += f[i] * d * d;
            if lambda > 0.0 {
                loss -= lambda * probs[j].log2();
            }
        }

        State {
            centers,
            probs,
            assignments,
            loss,
        }
    }
}

fn assign(w: &[f64], f: &[f64], centers: &[f64], probs: &[f64], lambda: f64) -> Vec<u32> {
    w.iter()
        .zip(f)
        .map(|(&wi, &fi)| {
            let mut best = None;
            let mut best_cost = f64::INFINITY;
            for (j, (&c, &p)) in centers.iter().zip(probs).enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let d = wi - c;
                let mut cost = fi * d * d;
                if lambda > 0.0 {
                    cost -= lambda * p.log2();
                }
                if best.is_none() || cost < best_cost {
                    best = Some(j as u32);
                    best_cost = cost;
                }
            }
            best.expect("at least one cluster has positive probability")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_clustering_of_symmetric_pairs() {
        let res = lloyd_quantize(&[-1.0, -1.0, 1.0, 1.0], None, 3, 0.0).unwrap();
        let mut sorted = res.centers.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![-1.0, 0.0, 1.0]);
        assert_eq!(*res.loss_history.last().unwrap(), 0.0);
        // every weight sits on a +-1 center
        for (i, &a) in res.assignments.iter().enumerate() {
            let c = res.centers[a as usize];
            let w = [-1.0, -1.0, 1.0, 1.0][i];
            assert_eq!(c, w);
        }
    }

    #[test]
    fn unweighted_lambda_zero_is_kmeans_objective() {
        let w: Vec<f32> = (0..200).map(|i| ((i * 37) % 101) as f32 / 10.0 - 5.0).collect();
        let res = lloyd_quantize(&w, None, 8, 0.0).unwrap();
        let kmeans_j: f64 = w
            .iter()
            .zip(&res.assignments)
            .map(|(&wi, &a)| {
                let d = wi as f64 - res.centers[a as usize];
                d * d
            })
            .sum();
        let last = *res.loss_history.last().unwrap();
        assert!((last - kmeans_j).abs() < 1e-9 * kmeans_j.max(1.0));
    }

    #[test]
    fn weighted_centroid_formula() {
        // first update step with members {0.9, 1.1}, F {10, 1}
        let state = State {
            centers: vec![-2.0, 1.1],
            probs: vec![0.5, 0.5],
            assignments: vec![0; 3],
            loss: f64::INFINITY,
        };
        let next = state.step(&[0.9, 1.1, -2.0], &[10.0, 1.0, 1.0], 0.0);
        let centroid: f64 = (10.0 * 0.9 + 1.0 * 1.1) / 11.0;
        assert!((centroid - 0.9181818181818182).abs() < 1e-12);
        // the update produced that centroid before zero enforcement snapped
        // the smaller-magnitude center; the -2 cluster keeps its centroid
        assert!(next.centers.contains(&-2.0));
        assert!(next.centers.contains(&0.0));
    }

    #[test]
    fn loss_history_non_increasing_randomized() {
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..20 {
            let n = 50 + (next() % 500) as usize;
            let w: Vec<f32> = (0..n)
                .map(|_| (next() % 20_000) as f32 / 1000.0 - 10.0)
                .collect();
            let f: Vec<f64> = (0..n).map(|_| (next() % 1000) as f64 / 100.0).collect();
            let f = if f.iter().all(|&x| x == 0.0) {
                None
            } else {
                Some(ImportanceMap::new(f).unwrap())
            };
            let k = 2 + (next() % 16) as usize;
            let lambda = (next() % 1000) as f64 / 1000.0;
            let res = lloyd_quantize(&w, f.as_ref(), k, lambda).unwrap();
            for pair in res.loss_history.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0),
                    "loss increased: {pair:?}"
                );
            }
            assert!(res.centers.iter().any(|&c| c == 0.0));
        }
    }

    #[test]
    fn more_clusters_than_distinct_values_reduces_k() {
        let res = lloyd_quantize(&[1.0, 1.0, 2.0, 2.0], None, 16, 0.0).unwrap();
        // two distinct values plus the forced zero center
        assert_eq!(res.effective_k, 3);
        assert_eq!(res.centers.len(), 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(lloyd_quantize(&[], None, 2, 0.0).is_err());
        assert!(lloyd_quantize(&[1.0], None, 1, 0.0).is_err());
        assert!(lloyd_quantize(&[1.0, 2.0], None, 2, -1.0).is_err());
    }

    #[test]
    fn constant_input_keeps_zero_center() {
        let res = lloyd_quantize(&[5.0; 10], None, 4, 0.1).unwrap();
        assert!(res.centers.contains(&0.0));
        assert_eq!(res.effective_k, 2);
        assert!(res.centers.contains(&5.0));
    }
}
