//! On-disk dataset splits.
//!
//! A split named `S` is stored as two files in one directory:
//!
//! * `S.json`: manifest with format version, seed, counts, class names and
//!   the label array;
//! * `S.bin`: little-endian `f32` coordinates, sample-major, then
//!   point-major, then `x, y, z`; followed by per-point features in the same
//!   order when `feature_dim > 0`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::pointcloud::{PointCloud, ShapeClass};

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub split: String,
    pub seed: u64,
    pub num_samples: usize,
    pub points_per_cloud: usize,
    pub feature_dim: usize,
    pub class_names: Vec<String>,
    pub labels: Vec<usize>,
    pub blob_file: String,
    pub blob_bytes: usize,
}

pub fn manifest_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.json"))
}

pub fn write_split(dir: &Path, split: &str, seed: u64, clouds: &[PointCloud]) -> Result<DatasetManifest> {
    let first = clouds
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot write an empty split".into()))?;
    let n = first.num_points();
    let c = first.feature_dim();
    if clouds.iter().any(|s| s.num_points() != n || s.feature_dim() != c) {
        return Err(Error::InvalidInput(
            "all clouds in a split must share point count and feature width".into(),
        ));
    }
    let mut blob = Vec::with_capacity(clouds.len() * n * (3 + c) * 4);
    for s in clouds {
        for v in s.coords.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    for s in clouds {
        if let Some(f) = &s.features {
            for v in f.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::create_dir_all(dir)?;
    let blob_file = format!("{split}.bin");
    fs::write(dir.join(&blob_file), &blob)?;
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        split: split.to_string(),
        seed,
        num_samples: clouds.len(),
        points_per_cloud: n,
        feature_dim: c,
        class_names: ShapeClass::names(),
        labels: clouds.iter().map(|s| s.label).collect(),
        blob_file,
        blob_bytes: blob.len(),
    };
    fs::write(manifest_path(dir, split), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_split(dir: &Path, split: &str) -> Result<(DatasetManifest, Vec<PointCloud>)> {
    let path = manifest_path(dir, split);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::FormatVersion(manifest.format_version));
    }
    let blob = fs::read(dir.join(&manifest.blob_file))?;
    let (s, n, c) = (
        manifest.num_samples,
        manifest.points_per_cloud,
        manifest.feature_dim,
    );
    let expected = s * n * (3 + c) * 4;
    if blob.len() != expected || manifest.blob_bytes != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: blob.len(),
        });
    }
    if manifest.labels.len() != s {
        return Err(Error::Structural(format!(
            "manifest lists {} labels for {s} samples",
            manifest.labels.len()
        )));
    }
    let floats: Vec<f32> = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let (coords, feats) = floats.split_at(s * n * 3);
    let clouds = (0..s)
        .map(|i| {
            let xyz = Tensor::new(vec![n, 3], coords[i * n * 3..(i + 1) * n * 3].to_vec())?;
            let f = if c > 0 {
                Some(Tensor::new(vec![n, c], feats[i * n * c..(i + 1) * n * c].to_vec())?)
            } else {
                None
            };
            PointCloud::new(xyz, f, manifest.labels[i])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, clouds))
}
