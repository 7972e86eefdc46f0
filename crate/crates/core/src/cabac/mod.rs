//! Context-adaptive binary arithmetic coding.

mod context;
mod engine;

pub use context::{ContextModel, ADAPT_SHIFT, BYPASS_COST_UNITS, PROB_BITS, PROB_MIN, PROB_ONE};
pub use engine::{Decoder, Encoder};

/// Cost of a bypass bin in fractional bits (exactly one).
pub const BYPASS_COST_BITS: f64 = 1.0;
