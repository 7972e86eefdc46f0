//! Binary arithmetic coder over adaptive context models.
//!
//! The engine is a 32-bit fixed-point range coder with byte-wise
//! renormalization and carry propagation through a cache/pending-byte
//! pipeline. Encoder and decoder share one canonical interval subdivision:
//!
//! ```text
//! bound = (range >> 16) * p_zero        // context-coded bins
//! bound = range >> 1                    // bypass bins
//! ```
//!
//! where `p_zero` is the 16-bit fixed-point probability of the 0-bin and the
//! 0-bin owns the lower subinterval `[low, low + bound)`. Termination emits
//! the index of a dyadic interval contained in the final coding interval, so
//! the whole-stream overhead stays within two bits plus byte alignment plus a
//! small constant engine slack.

use crate::bitio::{BitReader, BitWriter};
use crate::cabac::context::ContextModel;
use crate::{Error, Result};

/// Renormalize whenever the interval width drops below 2^24.
const RENORM_LIMIT: u32 = 1 << 24;

/// A well-formed stream never requires more than three bytes of lookahead
/// past its end (the decoder preloads four bytes, termination writes at
/// least one). Needing more means the payload was truncated.
const MAX_TAIL_BYTES: u32 = 3;

/// Arithmetic encoder. Obtain the payload with [`Encoder::finish`].
#[derive(Debug, Default)]
pub struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_len: u64,
    out: BitWriter,
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_len: 1,
            out: BitWriter::new(),
        }
    }

    /// Code one bin under an adaptive context; the context is updated exactly
    /// as the decoder will update it.
    pub fn encode_bin(&mut self, ctx: &mut ContextModel, bin: bool) {
        self.encode_with_p_zero(ctx.p_zero(), bin);
        ctx.update(bin);
    }

    /// Code one bin under a context without adapting it.
    pub fn encode_bin_frozen(&mut self, ctx: &ContextModel, bin: bool) {
        self.encode_with_p_zero(ctx.p_zero(), bin);
    }

    /// Code one equiprobable bin (costs one bit of interval width exactly).
    pub fn encode_bypass(&mut self, bin: bool) {
        let bound = self.range >> 1;
        self.subdivide(bound, bin);
    }

    fn encode_with_p_zero(&mut self, p_zero: u16, bin: bool) {
        let bound = (self.range >> 16) * p_zero as u32;
        self.subdivide(bound, bin);
    }

    fn subdivide(&mut self, bound: u32, bin: bool) {
        if bin {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        while self.range < RENORM_LIMIT {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            self.out.push_byte(self.cache.wrapping_add(carry));
            for _ in 1..self.cache_len {
                self.out.push_byte(0xFFu8.wrapping_add(carry));
            }
            self.cache = (self.low >> 24) as u8;
            self.cache_len = 0;
        }
        self.cache_len += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    /// Terminate the stream and return the byte-aligned payload.
    ///
    /// Picks the smallest `k` such that a `2^(32-k)`-wide aligned interval
    /// fits inside the final coding interval, writes those `k` bits (plus
    /// zero padding to whole bytes) and flushes the carry pipeline.
    pub fn finish(mut self) -> Vec<u8> {
        let (mut k, target) = {
            let mut k = 1u32;
            loop {
                let width = 1u64 << (32 - k);
                let target = (self.low + width - 1) & !(width - 1);
                if target + width <= self.low + self.range as u64 {
                    break (k, target);
                }
                k += 1;
                debug_assert!(k <= 32, "no dyadic interval found");
            }
        };
        self.low = target;
        k = k.div_ceil(8); // bytes carrying the termination bits
        for _ in 0..=k {
            self.shift_low();
        }
        let bytes = self.out.into_bytes();
        // The first pipeline byte is the integer part of a fraction in [0, 1):
        // always zero, so it is not part of the payload.
        debug_assert_eq!(bytes.first(), Some(&0));
        bytes[1..].to_vec()
    }
}

/// Arithmetic decoder over an encoder-produced payload.
#[derive(Debug)]
pub struct Decoder<'a> {
    range: u32,
    code: u32,
    reader: BitReader<'a>,
    tail_bytes: u32,
}

impl<'a> Decoder<'a> {
    /// Errors with a truncated-stream error if the payload is too short to
    /// hold even an empty coded sequence.
    pub fn new(payload: &'a [u8]) -> Result<Self> {
        let mut dec = Self {
            range: u32::MAX,
            code: 0,
            reader: BitReader::new(payload),
            tail_bytes: 0,
        };
        for _ in 0..4 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    /// Decode the bin coded at this position; mirrors [`Encoder::encode_bin`].
    pub fn decode_bin(&mut self, ctx: &mut ContextModel) -> Result<bool> {
        let bin = self.decode_with_p_zero(ctx.p_zero())?;
        ctx.update(bin);
        Ok(bin)
    }

    pub fn decode_bin_frozen(&mut self, ctx: &ContextModel) -> Result<bool> {
        self.decode_with_p_zero(ctx.p_zero())
    }

    pub fn decode_bypass(&mut self) -> Result<bool> {
        let bound = self.range >> 1;
        self.select(bound)
    }

    fn decode_with_p_zero(&mut self, p_zero: u16) -> Result<bool> {
        let bound = (self.range >> 16) * p_zero as u32;
        self.select(bound)
    }

    fn select(&mut self, bound: u32) -> Result<bool> {
        let bin = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        while self.range < RENORM_LIMIT {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(bin)
    }

    fn next_byte(&mut self) -> Result<u8> {
        if self.reader.remaining() >= 8 {
            Ok(self.reader.read_bits(8)? as u8)
        } else if self.tail_bytes < MAX_TAIL_BYTES {
            self.tail_bytes += 1;
            Ok(0)
        } else {
            Err(Error::truncated("arithmetic payload exhausted"))
        }
    }
}
