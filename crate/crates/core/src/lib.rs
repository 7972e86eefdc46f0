//! Lossless and lossy compression of neural-network weight tensors.
//!
//! The codec quantizes each tensor onto an equidistant grid (`q = delta * level`)
//! and entropy-codes the integer levels with a context-adaptive binary
//! arithmetic coder over a flag-based binarization (significance, sign,
//! magnitude-greater-than flags, Exponential-Golomb remainder). The quantizer
//! can trade distortion against the code length estimated by the live context
//! models, optionally weighting each parameter by an externally supplied
//! importance value.
//!
//! Modules:
//!
//! * [`bitio`] - MSB-first bit readers/writers backing the coder and container.
//! * [`cabac`] - adaptive context models plus the binary arithmetic engine.
//! * [`binarizer`] - integer level <-> bin sequence mapping and context layout.
//! * [`quant`] - uniform, weighted-Lloyd and rate-distortion quantizers plus
//!   step-size grids.
//! * [`baseline`] - scalar Huffman coder and empirical-distribution statistics
//!   used as comparison baselines.
//! * [`container`] - the `DCBC` stream format, NPY tensor ingestion and the
//!   manifest format.
//! * [`pipeline`] - per-tensor compress/decompress built from the above.
//! * [`sweep`] - hyperparameter grid evaluation and baseline size reports.

pub mod baseline;
pub mod binarizer;
pub mod bitio;
pub mod cabac;
pub mod container;
mod error;
pub mod parallel;
pub mod pipeline;
pub mod quant;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};
