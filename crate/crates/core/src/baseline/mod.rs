//! Comparison baselines: empirical-distribution statistics and a scalar
//! Huffman code.

mod histogram;
mod huffman;

pub use histogram::{entropy, epmd, SymbolHistogram};
pub use huffman::{huffman_build, huffman_decode, huffman_encode, HuffmanCode};
