//! The `DCBC` compressed stream format plus tensor and importance ingestion.

mod format;
mod manifest;
mod npy;

pub use format::{
    read_stream, write_stream, RecordPayload, StreamHeader, TensorRecord, FORMAT_VERSION, MAGIC,
};
pub use manifest::{manifest_parse, ManifestEntry};
pub use npy::{load_importance, load_npy, write_npy, ImportanceKind};
