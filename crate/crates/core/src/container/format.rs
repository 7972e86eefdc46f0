//! Bit-exact stream layout. All multi-byte integers are little-endian; the
//! step size is stored as the raw 32-bit float pattern so dequantization is
//! bit-identical across platforms.
//!
//! ```text
//! header:  "DCBC" | version u16 | tensor_count u32
//! record:  name_len u32 | name utf-8 | kind u8 | rank u32 | dims u32 * rank | body
//! kind 0:  delta f32 | n_flags u8 | payload_len u32 | payload    (cabac levels)
//! kind 1:  values f32 * product(dims)                            (raw passthrough)
//! kind 2:  k u32 | zero_index u32 | centers f32 * k |
//!          n_flags u8 | payload_len u32 | payload                (codebook levels)
//! ```
//!
//! Kind-1 records carry parameters that are not quantized (biases and other
//! small tensors); their bytes still count toward compressed sizes. Kind-2
//! records store cluster centers explicitly; coded levels are signed offsets
//! from `zero_index`, so the zero cluster is level 0.

use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DCBC";
pub const FORMAT_VERSION: u16 = 1;

const KIND_QUANTIZED: u8 = 0;
const KIND_RAW: u8 = 1;
const KIND_CODEBOOK: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub version: u16,
    pub tensor_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordPayload {
    /// CABAC-coded levels on an equidistant grid.
    Quantized {
        delta: f32,
        n_flags: u8,
        payload: Vec<u8>,
    },
    /// Uncompressed float passthrough.
    Raw { values: Vec<f32> },
    /// CABAC-coded cluster indices with an explicit reconstruction codebook.
    Codebook {
        centers: Vec<f32>,
        zero_index: u32,
        n_flags: u8,
        payload: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub payload: RecordPayload,
}

impl TensorRecord {
    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    fn validate(&self) -> Result<()> {
        match &self.payload {
            RecordPayload::Quantized { delta, .. } => {
                if !(*delta > 0.0) || !delta.is_finite() {
                    return Err(Error::invalid(format!(
                        "record '{}': delta must be positive, got {delta}",
                        self.name
                    )));
                }
            }
            RecordPayload::Raw { values } => {
                if values.len() != self.element_count() {
                    return Err(Error::invalid(format!(
                        "record '{}': raw payload holds {} values for shape {:?}",
                        self.name,
                        values.len(),
                        self.shape
                    )));
                }
            }
            RecordPayload::Codebook {
                centers,
                zero_index,
                ..
            } => {
                if centers.is_empty() || *zero_index as usize >= centers.len() {
                    return Err(Error::invalid(format!(
                        "record '{}': zero index {zero_index} outside codebook of {} centers",
                        self.name,
                        centers.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Serialize a stream: header, then records in order.
pub fn write_stream(records: &[TensorRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for record in records {
        record.validate()?;
        out.extend_from_slice(&(record.name.len() as u32).to_le_bytes());
        out.extend_from_slice(record.name.as_bytes());
        let kind = match &record.payload {
            RecordPayload::Quantized { .. } => KIND_QUANTIZED,
            RecordPayload::Raw { .. } => KIND_RAW,
            RecordPayload::Codebook { .. } => KIND_CODEBOOK,
        };
        out.push(kind);
        out.extend_from_slice(&(record.shape.len() as u32).to_le_bytes());
        for &d in &record.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match &record.payload {
            RecordPayload::Quantized {
                delta,
                n_flags,
                payload,
            } => {
                out.extend_from_slice(&delta.to_le_bytes());
                out.push(*n_flags);
                out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
                out.extend_from_slice(payload);
            }
            RecordPayload::Raw { values } => {
                for v in values {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            RecordPayload::Codebook {
                centers,
                zero_index,
                n_flags,
                payload,
            } => {
                out.extend_from_slice(&(centers.len() as u32).to_le_bytes());
                out.extend_from_slice(&zero_index.to_le_bytes());
                for c in centers {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                out.push(*n_flags);
                out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
                out.extend_from_slice(payload);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`write_stream`]. Magic, version and per-record truncation are
/// reported as distinct errors; truncation names the tensor being read.
pub fn read_stream(bytes: &[u8]) -> Result<Vec<TensorRecord>> {
    let mut r = ByteReader::new(bytes);
    let header = read_header(&mut r)?;
    let mut records = Vec::with_capacity(header.tensor_count as usize);
    for i in 0..header.tensor_count {
        records.push(read_record(&mut r, i)?);
    }
    if r.remaining() != 0 {
        return Err(Error::corrupt(format!(
            "{} trailing bytes after the last record",
            r.remaining()
        )));
    }
    Ok(records)
}

fn read_header(r: &mut ByteReader) -> Result<StreamHeader> {
    let magic = r.take(4, "header magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u16("header version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let tensor_count = r.u32("header tensor count")?;
    Ok(StreamHeader {
        version,
        tensor_count,
    })
}

fn read_record(r: &mut ByteReader, index: u32) -> Result<TensorRecord> {
    let anon = format!("record #{index}");
    let name_len = r.u32(&format!("{anon} name length"))? as usize;
    let name_bytes = r.take(name_len, &format!("{anon} name"))?;
    let name = String::from_utf8(name_bytes.to_vec())
        .map_err(|_| Error::corrupt(format!("{anon}: name is not UTF-8")))?;
    let kind = r.u8(&format!("'{name}' kind"))?;
    let rank = r.u32(&format!("'{name}' rank"))? as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(r.u32(&format!("'{name}' dims"))? as usize);
    }
    let count: usize = shape.iter().product();
    let payload = match kind {
        KIND_QUANTIZED => {
            let delta = f32::from_le_bytes(r.array(&format!("'{name}' delta"))?);
            let n_flags = r.u8(&format!("'{name}' n_flags"))?;
            let payload_len = r.u32(&format!("'{name}' payload length"))? as usize;
            let payload = r.take(payload_len, &format!("'{name}' payload"))?.to_vec();
            RecordPayload::Quantized {
                delta,
                n_flags,
                payload,
            }
        }
        KIND_RAW => {
            let mut values = Vec::with_capacity(count);
            let data = r.take(count * 4, &format!("'{name}' raw values"))?;
            for chunk in data.chunks_exact(4) {
                values.push(f32::from_le_bytes(chunk.try_into().unwrap()));
            }
            RecordPayload::Raw { values }
        }
        KIND_CODEBOOK => {
            let k = r.u32(&format!("'{name}' codebook size"))? as usize;
            let zero_index = r.u32(&format!("'{name}' zero index"))?;
            let data = r.take(k * 4, &format!("'{name}' codebook"))?;
            let centers = data
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let n_flags = r.u8(&format!("'{name}' n_flags"))?;
            let payload_len = r.u32(&format!("'{name}' payload length"))? as usize;
            let payload = r.take(payload_len, &format!("'{name}' payload"))?.to_vec();
            RecordPayload::Codebook {
                centers,
                zero_index,
                n_flags,
                payload,
            }
        }
        other => {
            return Err(Error::corrupt(format!(
                "'{name}': unknown record kind {other}"
            )))
        }
    };
    let record = TensorRecord {
        name,
        shape,
        payload,
    };
    record.validate()?;
    Ok(record)
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::truncated(format!(
                "{what}: wanted {n} bytes, {} left",
                self.remaining()
            )));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().unwrap())
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<TensorRecord> {
        vec![
            TensorRecord {
                name: "conv1.weight".into(),
                shape: vec![2, 3],
                payload: RecordPayload::Quantized {
                    delta: 0.125,
                    n_flags: 10,
                    payload: vec![0xAB, 0xCD, 0x00],
                },
            },
            TensorRecord {
                name: "conv1.bias".into(),
                shape: vec![3],
                payload: RecordPayload::Raw {
                    values: vec![0.5, -1.5, 3.25],
                },
            },
            TensorRecord {
                name: "fc.weight".into(),
                shape: vec![4],
                payload: RecordPayload::Codebook {
                    centers: vec![-1.0, 0.0, 2.0],
                    zero_index: 1,
                    n_flags: 2,
                    payload: vec![0x80],
                },
            },
        ]
    }

    #[test]
    fn empty_stream_is_exactly_ten_bytes() {
        let bytes = write_stream(&[]).unwrap();
        assert_eq!(bytes.len(), 10);
        assert_eq!(&bytes[0..4], b"DCBC");
        assert_eq!(read_stream(&bytes).unwrap(), vec![]);
    }

    #[test]
    fn roundtrip_preserves_records_and_order() {
        let records = sample_records();
        let bytes = write_stream(&records).unwrap();
        let back = read_stream(&bytes).unwrap();
        assert_eq!(back, records);
        // writing again is byte-identical
        assert_eq!(write_stream(&back).unwrap(), bytes);
    }

    #[test]
    fn bad_magic_detected() {
        let mut bytes = write_stream(&[]).unwrap();
        bytes[0] = b'X';
        assert!(matches!(read_stream(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn unsupported_version_detected() {
        let mut bytes = write_stream(&[]).unwrap();
        bytes[4] = 9;
        assert!(matches!(
            read_stream(&bytes),
            Err(Error::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn truncation_names_the_tensor() {
        let records = sample_records();
        let bytes = write_stream(&records).unwrap();
        let cut = &bytes[..bytes.len() - 10];
        match read_stream(cut) {
            Err(Error::TruncatedStream(msg)) => {
                assert!(msg.contains("fc.weight"), "message was: {msg}")
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_detected() {
        let mut bytes = write_stream(&sample_records()).unwrap();
        bytes.push(0);
        assert!(matches!(read_stream(&bytes), Err(Error::CorruptStream(_))));
    }

    #[test]
    fn nonpositive_delta_rejected_both_ways() {
        let record = TensorRecord {
            name: "t".into(),
            shape: vec![1],
            payload: RecordPayload::Quantized {
                delta: 0.0,
                n_flags: 1,
                payload: vec![],
            },
        };
        assert!(write_stream(&[record]).is_err());
    }
}
