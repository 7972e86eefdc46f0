//! Lossy stage: uniform nearest-neighbor quantization, importance-weighted
//! Lloyd clustering, the rate-distortion quantizer driven by CABAC code-length
//! estimates, and step-size candidate grids.

mod lloyd;
mod rd;
mod stepsize;
mod uniform;

pub use lloyd::{lloyd_quantize, LloydResult};
pub use rd::{rd_quantize, RdHyperParams, WINDOW_RADIUS};
pub use stepsize::{
    dcv1_lambda_grid, stepsizes_v1, stepsizes_v2, GridRequest, V2Grids, DEFAULT_S_VALUES,
};
pub use uniform::{distortion, uniform_quantize};
