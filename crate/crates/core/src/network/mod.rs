//! The miniature set-abstraction classifier.
//!
//! A network is a stack of SA blocks followed by a global max-pool head.
//! Block `b` samples `n_out` centroids from its input points by farthest
//! point sampling, groups up to `g` neighbors per centroid with a ball
//! query, applies a shared affine+ReLU stack to every `[features ;
//! relative xyz]` row and max-reduces over the neighbors. The head takes the
//! max over the last block's centroids, then `fc1 + ReLU` and `fc2`.

pub mod checkpoint;
mod flops;
pub(crate) mod forward;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::seeded;
use crate::numerics::{ParamSet, Tensor};

pub use flops::{count_flops, pct_drop, FlopsReport, LayerFlops, OpKind};
pub use forward::{forward, forward_pass, BlockPass, ForwardPass, LayerTrace};
pub use train::{
    batch_loss_and_gradients, evaluate, train, EpochStats, EvalMetrics, LrSchedule, TrainConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaBlockSpec {
    /// Number of centroids kept by farthest point sampling.
    pub n_out: usize,
    pub radius: f32,
    pub group_size: usize,
    /// Widths `[c_prev + 3, w_1, ..., c_out]`.
    pub mlp: Vec<usize>,
}

impl SaBlockSpec {
    pub fn out_channels(&self) -> usize {
        *self.mlp.last().unwrap_or(&0)
    }

    pub fn num_layers(&self) -> usize {
        self.mlp.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub hidden: usize,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_features: usize,
    pub blocks: Vec<SaBlockSpec>,
    pub head: HeadSpec,
}

/// One prunable affine layer: output layer `layer` of SA block `block`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct LayerId {
    pub block: usize,
    pub layer: usize,
}

impl LayerId {
    pub fn new(block: usize, layer: usize) -> Self {
        Self { block, layer }
    }

    pub fn weight_key(&self) -> String {
        format!("{self}.weight")
    }

    pub fn bias_key(&self) -> String {
        format!("{self}.bias")
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sa{}.mlp{}", self.block, self.layer)
    }
}

impl FromStr for LayerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("malformed layer id `{s}`"));
        let rest = s.strip_prefix("sa").ok_or_else(bad)?;
        let (b, l) = rest.split_once(".mlp").ok_or_else(bad)?;
        Ok(Self {
            block: b.parse().map_err(|_| bad())?,
            layer: l.parse().map_err(|_| bad())?,
        })
    }
}

impl From<LayerId> for String {
    fn from(id: LayerId) -> Self {
        id.to_string()
    }
}

impl TryFrom<String> for LayerId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

pub const HEAD_FC1_WEIGHT: &str = "head.fc1.weight";
pub const HEAD_FC1_BIAS: &str = "head.fc1.bias";
pub const HEAD_FC2_WEIGHT: &str = "head.fc2.weight";
pub const HEAD_FC2_BIAS: &str = "head.fc2.bias";

impl NetworkSpec {
    /// Three SA blocks of widths 32/64/128 over 512-point clouds, 8 classes.
    pub fn default_classifier() -> Self {
        Self {
            input_features: 0,
            blocks: vec![
                SaBlockSpec {
                    n_out: 64,
                    radius: 0.3,
                    group_size: 16,
                    mlp: vec![3, 32, 32],
                },
                SaBlockSpec {
                    n_out: 16,
                    radius: 0.6,
                    group_size: 8,
                    mlp: vec![35, 64, 64],
                },
                SaBlockSpec {
                    n_out: 4,
                    radius: 1.2,
                    group_size: 8,
                    mlp: vec![67, 128, 128],
                },
            ],
            head: HeadSpec {
                hidden: 64,
                num_classes: 8,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Structural("network needs at least one SA block".into()));
        }
        let mut prev_channels = self.input_features;
        let mut prev_n: Option<usize> = None;
        for (b, block) in self.blocks.iter().enumerate() {
            if block.mlp.len() < 2 {
                return Err(Error::Structural(format!("sa{b}: MLP needs at least one layer")));
            }
            if block.mlp[0] != prev_channels + 3 {
                return Err(Error::Structural(format!(
                    "sa{b}: first MLP width {} must equal previous channels {prev_channels} + 3",
                    block.mlp[0]
                )));
            }
            if block.mlp.contains(&0) {
                return Err(Error::Structural(format!("sa{b}: MLP widths must be positive")));
            }
            if block.n_out == 0 || block.group_size == 0 || !(block.radius > 0.0) {
                return Err(Error::Structural(format!(
                    "sa{b}: n_out, group size and radius must be positive"
                )));
            }
            if prev_n.is_some_and(|p| block.n_out > p) {
                return Err(Error::Structural(format!(
                    "sa{b}: n_out {} exceeds previous block's {}",
                    block.n_out,
                    prev_n.unwrap()
                )));
            }
            prev_n = Some(block.n_out);
            prev_channels = block.out_channels();
        }
        if self.head.hidden == 0 || self.head.num_classes == 0 {
            return Err(Error::Structural("head widths must be positive".into()));
        }
        Ok(())
    }

    pub fn final_channels(&self) -> usize {
        self.blocks.last().map_or(0, SaBlockSpec::out_channels)
    }

    /// Input feature width of block `b` (without the 3 coordinate columns).
    pub fn block_in_channels(&self, b: usize) -> usize {
        if b == 0 {
            self.input_features
        } else {
            self.blocks[b - 1].out_channels()
        }
    }

    /// All prunable layers in network order.
    pub fn prunable_layers(&self) -> Vec<LayerId> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (0..blk.num_layers()).map(move |l| LayerId::new(b, l)))
            .collect()
    }

    pub fn layer_width(&self, id: LayerId) -> Result<usize> {
        self.blocks
            .get(id.block)
            .and_then(|b| b.mlp.get(id.layer + 1))
            .copied()
            .ok_or_else(|| Error::Structural(format!("no layer {id}")))
    }

    /// Every parameter key with its shape, in network order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            for l in 0..block.num_layers() {
                let id = LayerId::new(b, l);
                out.push((id.weight_key(), vec![block.mlp[l], block.mlp[l + 1]]));
                out.push((id.bias_key(), vec![block.mlp[l + 1]]));
            }
        }
        out.push((
            HEAD_FC1_WEIGHT.into(),
            vec![self.final_channels(), self.head.hidden],
        ));
        out.push((HEAD_FC1_BIAS.into(), vec![self.head.hidden]));
        out.push((
            HEAD_FC2_WEIGHT.into(),
            vec![self.head.hidden, self.head.num_classes],
        ));
        out.push((HEAD_FC2_BIAS.into(), vec![self.head.num_classes]));
        out
    }

    pub fn num_params(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }
}

/// A spec together with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub spec: NetworkSpec,
    pub params: ParamSet,
}

impl NetworkState {
    /// He-uniform weights and zero biases drawn from `seed`.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded(seed);
        let mut params = ParamSet::new();
        for (key, shape) in spec.param_shapes() {
            let t = if shape.len() == 2 {
                let limit = (6.0 / shape[0] as f32).sqrt();
                let n = shape[0] * shape[1];
                Tensor::new(shape, (0..n).map(|_| rng.gen_range(-limit..limit)).collect())?
            } else {
                Tensor::zeros(&shape)
            };
            params.insert(key, t);
        }
        Ok(Self { spec, params })
    }

    pub fn from_parts(spec: NetworkSpec, params: ParamSet) -> Result<Self> {
        let s = Self { spec, params };
        s.validate()?;
        Ok(s)
    }

    /// Every key required by the spec is present with the implied shape,
    /// and there are no extra keys.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let shapes = self.spec.param_shapes();
        if shapes.len() != self.params.len() {
            return Err(Error::Structural(format!(
                "spec implies {} parameters, state has {}",
                shapes.len(),
                self.params.len()
            )));
        }
        for (key, shape) in shapes {
            let t = self.params.get(&key)?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Structural(format!(
                    "parameter `{key}` has shape {:?}, spec implies {shape:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn weight(&self, id: LayerId) -> Result<&Tensor> {
        self.params.get(&id.weight_key())
    }

    pub fn bias(&self, id: LayerId) -> Result<&Tensor> {
        self.params.get(&id.bias_key())
    }
}
