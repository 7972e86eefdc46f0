//! Byte-buffer-backed bit I/O. Bits are packed MSB-first within each byte;
//! the container format depends on this layout byte-exactly.

use crate::{Error, Result};

/// Growable bit sink. Bits are appended MSB-first.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    buf: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// Append the low `count` bits of `value`, most significant first.
    ///
    /// `count` must be in `1..=64` and `value` must fit in `count` bits.
    pub fn write_bits(&mut self, value: u64, count: u32) -> Result<()> {
        if count == 0 || count > 64 {
            return Err(Error::ValueOutOfRange { value, count });
        }
        if count < 64 && value >> count != 0 {
            return Err(Error::ValueOutOfRange { value, count });
        }
        for i in (0..count).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
        Ok(())
    }

    pub fn push_bit(&mut self, bit: bool) {
        let offset = self.bit_len % 8;
        if offset == 0 {
            self.buf.push(0);
        }
        if bit {
            *self.buf.last_mut().unwrap() |= 1 << (7 - offset);
        }
        self.bit_len += 1;
    }

    /// Append one whole byte. Equivalent to `write_bits(byte, 8)` but infallible.
    pub fn push_byte(&mut self, byte: u8) {
        if self.bit_len % 8 == 0 {
            self.buf.push(byte);
            self.bit_len += 8;
        } else {
            for i in (0..8).rev() {
                self.push_bit((byte >> i) & 1 == 1);
            }
        }
    }

    /// Append zero bits until the length is a whole number of bytes.
    pub fn align_to_byte(&mut self) {
        while self.bit_len % 8 != 0 {
            self.push_bit(false);
        }
    }

    /// Consume the writer, returning the packed bytes. Unfinished trailing
    /// bits are zero-padded (the byte was zero-initialized on push).
    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }
}

/// Immutable bit source over a byte slice. Reading past the end is an error,
/// never a silent zero-fill.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    cursor: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, cursor: 0 }
    }

    /// Bits left to read.
    pub fn remaining(&self) -> usize {
        self.data.len() * 8 - self.cursor
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.cursor >= self.data.len() * 8 {
            return Err(Error::truncated("bit read past end of buffer"));
        }
        let byte = self.data[self.cursor / 8];
        let bit = (byte >> (7 - self.cursor % 8)) & 1 == 1;
        self.cursor += 1;
        Ok(bit)
    }

    /// Read `count` bits (1..=64), MSB-first, as written by `write_bits`.
    pub fn read_bits(&mut self, count: u32) -> Result<u64> {
        if count == 0 || count > 64 {
            return Err(Error::ValueOutOfRange { value: 0, count });
        }
        if self.remaining() < count as usize {
            return Err(Error::truncated(format!(
                "wanted {count} bits, {} left",
                self.remaining()
            )));
        }
        let mut value = 0u64;
        for _ in 0..count {
            value = (value << 1) | self.read_bit()? as u64;
        }
        Ok(value)
    }
}
