//! On-disk formats: CVF1 case files, JSON-lines manifests, CVK1 checkpoints,
//! and the synthetic dataset generator.
//!
//! Every file is written atomically: bytes go to a temporary file in the
//! target directory, which is then renamed over the destination.

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::lowfi::LowFiError;
use crate::model::ModelError;
use crate::numerics::NumericsError;

mod case;
mod checkpoint;
mod container;
mod generate;
mod manifest;

pub use case::{decode_case, encode_case, read_case, write_case, Case, CASE_MAGIC, CASE_VERSION, LITTLE_ENDIAN};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_for, save_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use container::{ArrayData, NamedArray, DTYPE_F32, DTYPE_U32};
pub use generate::{generate_case, generate_dataset, GenerateConfig, MANIFEST_FILE};
pub use manifest::{build_manifest, Manifest, ManifestEntry, Split, SplitCounts, SplitSpec, CASE_EXTENSION};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported version {found} (expected {expected})")]
    UnsupportedVersion { found: u16, expected: u16 },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("no case files in {}", .0.display())]
    EmptyDirectory(PathBuf),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    LowFi(#[from] LowFiError),
}

pub type Result<T> = std::result::Result<T, DataError>;

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| DataError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Reads the cases of one split; manifest paths are relative to the manifest's directory.
pub fn load_split(manifest_path: &Path, manifest: &Manifest, split: Split) -> Result<Vec<Case>> {
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    manifest.paths(split).into_iter().map(|p| read_case(&root.join(p))).collect()
}
