//! NPY array-file ingestion and output. Only version 1.0/2.0 files holding
//! little-endian 4-byte floats in C order are accepted; anything else is an
//! ingestion error with a reason.

use std::path::Path;

use crate::tensor::{ImportanceMap, WeightTensor};
use crate::{Error, Result};

const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";

/// How an importance file's values are to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceKind {
    /// Values are importance weights, used as-is.
    Fisher,
    /// Values are per-weight standard deviations; importance is `1/sigma^2`
    /// with sigma floored at 1e-8.
    Sigma,
    /// No file; every weight has importance 1.
    Uniform,
}

/// Load a weight tensor. The tensor name is the file stem.
pub fn load_npy(path: &Path) -> Result<WeightTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::Npy {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (shape, values) = parse_npy(&bytes).map_err(|reason| Error::Npy {
        path: path.to_path_buf(),
        reason,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "tensor".to_string());
    WeightTensor::new(name, shape, values)
}

/// Load an importance map aligned with `tensor`.
pub fn load_importance(
    path: Option<&Path>,
    tensor: &WeightTensor,
    kind: ImportanceKind,
) -> Result<ImportanceMap> {
    match kind {
        ImportanceKind::Uniform => Ok(ImportanceMap::uniform(tensor.len())),
        ImportanceKind::Fisher | ImportanceKind::Sigma => {
            let path = path.ok_or_else(|| {
                Error::invalid(format!(
                    "tensor '{}': importance kind requires a file",
                    tensor.name
                ))
            })?;
            let loaded = load_npy(path)?;
            if loaded.len() != tensor.len() {
                return Err(Error::invalid(format!(
                    "importance file {} holds {} values, tensor '{}' has {}",
                    path.display(),
                    loaded.len(),
                    tensor.name,
                    tensor.len()
                )));
            }
            let values: Vec<f64> = loaded.values.iter().map(|&v| v as f64).collect();
            match kind {
                ImportanceKind::Fisher => ImportanceMap::new(values),
                ImportanceKind::Sigma => {
                    if values.iter().any(|&v| v < 0.0) {
                        return Err(Error::invalid(format!(
                            "importance file {}: negative sigma",
                            path.display()
                        )));
                    }
                    ImportanceMap::from_sigmas(&values)
                }
                ImportanceKind::Uniform => unreachable!(),
            }
        }
    }
}

fn parse_npy(bytes: &[u8]) -> std::result::Result<(Vec<usize>, Vec<f32>), String> {
    if bytes.len() < 8 || &bytes[0..6] != NPY_MAGIC {
        return Err("not an NPY file (bad magic)".into());
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match (major, minor) {
        (1, 0) => {
            if bytes.len() < 10 {
                return Err("file ends inside the v1 header length".into());
            }
            (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10)
        }
        (2, 0) => {
            if bytes.len() < 12 {
                return Err("file ends inside the v2 header length".into());
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        _ => return Err(format!("unsupported NPY version {major}.{minor}")),
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err("file ends inside the header".into());
    }
    let header = std::str::from_utf8(&bytes[header_start..data_start])
        .map_err(|_| "header is not ASCII".to_string())?;

    let descr = dict_str_value(header, "descr").ok_or("header lacks a 'descr' entry")?;
    if descr != "<f4" {
        return Err(format!(
            "dtype '{descr}' not supported (need little-endian float32 '<f4')"
        ));
    }
    let fortran = dict_raw_value(header, "fortran_order").ok_or("header lacks 'fortran_order'")?;
    if fortran.starts_with("True") {
        return Err("Fortran-order arrays are not supported".into());
    }
    if !fortran.starts_with("False") {
        return Err(format!("unparseable fortran_order '{fortran}'"));
    }
    let shape_src = dict_raw_value(header, "shape").ok_or("header lacks 'shape'")?;
    let shape = parse_shape(shape_src)?;

    let count: usize = shape.iter().product();
    let data = &bytes[data_start..];
    if data.len() != count * 4 {
        return Err(format!(
            "data section holds {} bytes, shape {shape:?} needs {}",
            data.len(),
            count * 4
        ));
    }
    let values = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((shape, values))
}

/// Value of `'key': '...'` in the header dict.
fn dict_str_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let raw = dict_raw_value(header, key)?;
    let raw = raw.strip_prefix('\'')?;
    let end = raw.find('\'')?;
    Some(&raw[..end])
}

/// Text following `'key':`, trimmed, up to the end of the header.
fn dict_raw_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("'{key}':");
    let at = header.find(&pat)?;
    Some(header[at + pat.len()..].trim_start())
}

/// Parse a Python int tuple: `()`, `(5,)`, `(2, 3)`.
fn parse_shape(src: &str) -> std::result::Result<Vec<usize>, String> {
    let src = src
        .strip_prefix('(')
        .ok_or_else(|| format!("shape does not start with '(': {src}"))?;
    let end = src
        .find(')')
        .ok_or_else(|| format!("shape tuple not closed: {src}"))?;
    let inner = &src[..end];
    let mut shape = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        shape.push(
            part.parse::<usize>()
                .map_err(|_| format!("bad shape element '{part}'"))?,
        );
    }
    Ok(shape)
}

/// Write a v1.0 little-endian float32 C-order NPY file.
pub fn write_npy(path: &Path, shape: &[usize], values: &[f32]) -> Result<()> {
    let expected: usize = shape.iter().product();
    if expected != values.len() {
        return Err(Error::invalid(format!(
            "npy write: shape {shape:?} holds {expected} values, got {}",
            values.len()
        )));
    }
    let shape_txt = match shape.len() {
        0 => "()".to_string(),
        1 => format!("({},)", shape[0]),
        _ => format!(
            "({})",
            shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {shape_txt}, }}");
    let unpadded = 10 + header.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    header.extend(std::iter::repeat(' ').take(pad));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + values.len() * 4);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}
