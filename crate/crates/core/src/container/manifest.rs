//! Job manifest: an ordered list of tensors to compress, with optional
//! per-tensor importance files. The file order defines the layer scan order.
//!
//! ```json
//! {
//!   "tensors": [
//!     {"weights": "fc1.npy", "importance": "fc1_sigma.npy", "name": "fc1"},
//!     {"weights": "fc1_bias.npy", "importance": null, "name": "fc1.bias", "raw": true}
//!   ]
//! }
//! ```
//!
//! Paths are resolved relative to the manifest's directory. `raw` marks
//! parameters that are passed through uncompressed (biases and the like).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub weights: PathBuf,
    pub importance: Option<PathBuf>,
    /// Pass this tensor through uncompressed.
    pub raw: bool,
}

#[derive(Deserialize)]
struct ManifestDoc {
    tensors: Vec<EntryDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    weights: String,
    #[serde(default)]
    importance: Option<String>,
    name: String,
    #[serde(default)]
    raw: bool,
}

/// Parse and validate a manifest: JSON shape, unique names, files present.
pub fn manifest_parse(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let doc: ManifestDoc =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("malformed: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(doc.tensors.len());
    for t in doc.tensors {
        if !seen.insert(t.name.clone()) {
            return Err(Error::Manifest(format!("duplicate tensor name '{}'", t.name)));
        }
        let weights = base.join(&t.weights);
        if !weights.is_file() {
            return Err(Error::Manifest(format!(
                "weights file {} not found",
                weights.display()
            )));
        }
        let importance = match t.importance {
            Some(p) => {
                let p = base.join(p);
                if !p.is_file() {
                    return Err(Error::Manifest(format!(
                        "importance file {} not found",
                        p.display()
                    )));
                }
                Some(p)
            }
            None => None,
        };
        entries.push(ManifestEntry {
            name: t.name,
            weights,
            importance,
            raw: t.raw,
        });
    }
    Ok(entries)
}
