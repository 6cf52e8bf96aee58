//! Point clouds, the synthetic shape dataset and the sampling/grouping
//! primitives of a set-abstraction block.

mod grouping;
pub mod io;
mod sampling;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub use grouping::{ball_query_group, Grouping};
pub use sampling::{farthest_point_sample, SampleResult};
pub use synth::{generate_dataset, ShapeClass, NUM_CLASSES};

/// One labeled sample: `[n x 3]` coordinates and optional `[n x c]` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub coords: Tensor,
    pub features: Option<Tensor>,
    pub label: usize,
}

impl PointCloud {
    pub fn new(coords: Tensor, features: Option<Tensor>, label: usize) -> Result<Self> {
        if coords.rank() != 2 || coords.shape()[1] != 3 {
            return Err(Error::Dimension {
                op: "PointCloud coords",
                left: coords.shape().to_vec(),
                right: vec![coords.rows(), 3],
            });
        }
        if !coords.is_finite() {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        if let Some(f) = &features {
            if f.rank() != 2 || f.shape()[0] != coords.shape()[0] {
                return Err(Error::Dimension {
                    op: "PointCloud features",
                    left: f.shape().to_vec(),
                    right: coords.shape().to_vec(),
                });
            }
        }
        Ok(Self {
            coords,
            features,
            label,
        })
    }

    pub fn num_points(&self) -> usize {
        self.coords.shape()[0]
    }

    pub fn feature_dim(&self) -> usize {
        self.features.as_ref().map_or(0, Tensor::cols)
    }

    pub fn point(&self, i: usize) -> [f32; 3] {
        let r = self.coords.row(i);
        [r[0], r[1], r[2]]
    }
}
