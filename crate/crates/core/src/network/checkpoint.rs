//! Checkpoint files.
//!
//! `save_checkpoint(state, "model.json")` writes the JSON manifest to
//! `model.json` and the weights to `model.bin`: every tensor's `f32` values
//! in little-endian order, concatenated in the manifest's key order. The
//! manifest records each key's shape and byte offset.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NetworkSpec, NetworkState};
use crate::numerics::{ParamSet, Tensor};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub key: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub spec: NetworkSpec,
    pub tensors: Vec<TensorEntry>,
    pub blob_file: String,
    pub blob_bytes: usize,
}

pub fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

pub fn save_checkpoint(state: &NetworkState, path: &Path) -> Result<()> {
    state.validate()?;
    let mut blob = Vec::with_capacity(state.params.num_scalars() * 4);
    let mut tensors = Vec::new();
    for (key, shape) in state.spec.param_shapes() {
        let t = state.params.get(&key)?;
        tensors.push(TensorEntry {
            key,
            shape,
            offset: blob.len(),
        });
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let blob_file = blob_path(path)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidInput(format!("bad checkpoint path {}", path.display())))?;
    let manifest = CheckpointManifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        spec: state.spec.clone(),
        tensors,
        blob_file,
        blob_bytes: blob.len(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(blob_path(path), &blob)?;
    fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkState> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::FormatVersion(manifest.format_version));
    }
    manifest.spec.validate()?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let blob = fs::read(dir.join(&manifest.blob_file))?;

    let expected_shapes = manifest.spec.param_shapes();
    if expected_shapes.len() != manifest.tensors.len() {
        return Err(Error::Structural(format!(
            "manifest lists {} tensors, spec implies {}",
            manifest.tensors.len(),
            expected_shapes.len()
        )));
    }
    let mut expected_bytes = 0usize;
    for (entry, (key, shape)) in manifest.tensors.iter().zip(&expected_shapes) {
        if &entry.key != key {
            return Err(Error::Structural(format!(
                "manifest key `{}` where spec expects `{key}`",
                entry.key
            )));
        }
        if &entry.shape != shape {
            return Err(Error::Structural(format!(
                "tensor `{key}` has manifest shape {:?}, spec implies {shape:?}",
                entry.shape
            )));
        }
        if entry.offset != expected_bytes {
            return Err(Error::Structural(format!(
                "tensor `{key}` at offset {}, expected {expected_bytes}",
                entry.offset
            )));
        }
        expected_bytes += shape.iter().product::<usize>() * 4;
    }
    if blob.len() != expected_bytes || manifest.blob_bytes != expected_bytes {
        return Err(Error::LengthMismatch {
            expected: expected_bytes,
            actual: blob.len(),
        });
    }

    let mut params = ParamSet::new();
    for entry in &manifest.tensors {
        let n: usize = entry.shape.iter().product();
        let bytes = &blob[entry.offset..entry.offset + n * 4];
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        params.insert(entry.key.clone(), Tensor::new(entry.shape.clone(), data)?);
    }
    NetworkState::from_parts(manifest.spec, params)
}
