use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{read_arrays, take_array, write_arrays, NamedArray, Reader};
use super::{read_file, write_atomic, DataError, Result};
use crate::model::{check_store, ModelConfig, ModelError};
use crate::numerics::{Array, ParamStore};
use crate::training::{NormStats, TrainConfig};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CVK1";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Parameters, optimizer moments and the configuration needed to use or
/// resume them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub stats: NormStats,
    /// Completed epochs.
    pub epoch: usize,
    pub train: Option<TrainConfig>,
    pub best_val_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    pub store: ParamStore<f32>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    stats: NormStats,
    epoch: usize,
    step: u64,
    names: Vec<String>,
    #[serde(default)]
    train: Option<TrainConfig>,
    #[serde(default)]
    best_val_loss: Option<f64>,
    #[serde(default)]
    best_epoch: Option<usize>,
}

/// Layout: magic, version u16, endian u8, reserved u8, header length u64,
/// UTF-8 JSON header, then named f32 arrays `param/<name>`, `m1/<name>`, `m2/<name>`.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    check_store(&ckpt.store, &ckpt.model)?;
    let header = Header {
        model: ckpt.model.clone(),
        stats: ckpt.stats.clone(),
        epoch: ckpt.epoch,
        step: ckpt.store.step(),
        names: ckpt.store.names().to_vec(),
        train: ckpt.train.clone(),
        best_val_loss: ckpt.best_val_loss,
        best_epoch: ckpt.best_epoch,
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.push(super::LITTLE_ENDIAN);
    buf.push(0);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    let (m1, m2) = ckpt.store.moments();
    let mut arrays = Vec::with_capacity(3 * ckpt.store.len());
    for (prefix, values) in [("param", ckpt.store.values()), ("m1", m1), ("m2", m2)] {
        for (name, a) in ckpt.store.names().iter().zip(values) {
            arrays.push(NamedArray::f32(format!("{prefix}/{name}"), a.shape(), a.data().to_vec()));
        }
    }
    write_arrays(&mut buf, &arrays);
    Ok(buf)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    if r.bytes(4).map_err(|_| DataError::Format("file too short for a CVK1 header".into()))? != CHECKPOINT_MAGIC {
        return Err(DataError::Format("bad magic, not a CVK1 checkpoint".into()));
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(DataError::UnsupportedVersion { found: version, expected: CHECKPOINT_VERSION });
    }
    if r.u8()? != super::LITTLE_ENDIAN {
        return Err(DataError::Format("only little-endian payloads are supported".into()));
    }
    r.u8()?;
    let len = r.u64()?;
    if len > r.remaining() as u64 {
        return Err(DataError::SizeMismatch(format!("header declares {len} bytes beyond the payload")));
    }
    let header: Header = serde_json::from_slice(r.bytes(len as usize)?)?;
    let mut arrays = read_arrays(&mut r)?;
    r.finish()?;
    header.model.validate()?;

    let mut take = |prefix: &str| -> Result<Vec<Array<f32>>> {
        header
            .names
            .iter()
            .map(|name| {
                let a = take_array(&mut arrays, &format!("{prefix}/{name}"))?;
                let dims = a.dims_usize();
                Ok(Array::new(dims, a.into_f32()?)?)
            })
            .collect()
    };
    let values = take("param")?;
    let m1 = take("m1")?;
    let m2 = take("m2")?;
    if let Some(extra) = arrays.first() {
        return Err(DataError::Format(format!("unexpected array {}", extra.name)));
    }
    let store = ParamStore::from_parts(header.names, values, m1, m2, header.step)?;
    check_store(&store, &header.model)?;
    Ok(Checkpoint {
        model: header.model,
        stats: header.stats,
        epoch: header.epoch,
        train: header.train,
        best_val_loss: header.best_val_loss,
        best_epoch: header.best_epoch,
        store,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ckpt)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path)?)
}

/// Loads a checkpoint and checks its parameters against `expected`; any
/// name or shape difference (e.g. another M) is a shape error.
pub fn load_checkpoint_for(path: &Path, expected: &ModelConfig) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    check_store(&ckpt.store, expected)?;
    if &ckpt.model != expected {
        return Err(ModelError::Shape(format!(
            "checkpoint was trained with {:?}, expected {:?}",
            ckpt.model, expected
        ))
        .into());
    }
    Ok(ckpt)
}
