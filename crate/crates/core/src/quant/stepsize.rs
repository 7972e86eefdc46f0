//! Step-size and rate-weight candidate grids for the two sweep flavors.

use crate::{Error, Result};

/// Default coarseness grid for the sigma-derived per-layer step sizes.
pub const DEFAULT_S_VALUES: [u32; 11] = [0, 8, 16, 32, 64, 96, 128, 160, 172, 192, 256];

/// Per-layer step size from the coarseness parameter `S`:
/// `delta = 2*w_max / (2*w_max / sigma_min + S)`.
///
/// `S = 0` returns `sigma_min` exactly (the formula reduces to it
/// algebraically, so it is pinned rather than recomputed through division).
pub fn stepsizes_v1(w_max_abs: f64, sigma_min: f64, s_values: &[u32]) -> Result<Vec<f64>> {
    if !(w_max_abs > 0.0) || !w_max_abs.is_finite() {
        return Err(Error::invalid(format!(
            "w_max_abs must be positive, got {w_max_abs}"
        )));
    }
    if !(sigma_min > 0.0) || !sigma_min.is_finite() {
        return Err(Error::invalid(format!(
            "sigma_min must be positive, got {sigma_min}"
        )));
    }
    Ok(s_values
        .iter()
        .map(|&s| {
            if s == 0 {
                sigma_min
            } else {
                let span = 2.0 * w_max_abs;
                span / (span / sigma_min + s as f64)
            }
        })
        .collect())
}

/// Rate-weight grid paired with the per-layer step sizes:
/// `lambda_i = 1e-4 * 2^(log2(100) * i/100)` for `i = 0..100`.
pub fn dcv1_lambda_grid() -> Vec<f64> {
    (0..100)
        .map(|i| 1e-4 * (100f64.log2() * i as f64 / 100.0).exp2())
        .collect()
}

/// Overrides for the global-step-size grids; `None` selects the defaults.
#[derive(Debug, Default, Clone)]
pub struct GridRequest {
    pub lambdas: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct V2Grids {
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Global-step-size sweep grids: 21 rate weights `0.02/20 * i + 0.01` and two
/// log-spaced step-size families (0.001..0.15 in 71 steps, 0.064..0.128 in
/// 31 steps), unless overridden.
pub fn stepsizes_v2(request: &GridRequest) -> V2Grids {
    let lambdas = request
        .lambdas
        .clone()
        .unwrap_or_else(|| (0..=20).map(|i| 0.02 / 20.0 * i as f64 + 0.01).collect());
    let deltas = request.deltas.clone().unwrap_or_else(|| {
        let mut d = log_spaced(0.001, 0.15, 70);
        d.extend(log_spaced(0.064, 0.128, 30));
        d
    });
    V2Grids { lambdas, deltas }
}

/// `lo * 2^(log2(hi/lo) * i/n)` for `i = 0..=n`.
fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi / lo).log2();
    (0..=n)
        .map(|i| lo * (span * i as f64 / n as f64).exp2())
        .collect()
}
