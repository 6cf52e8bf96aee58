//! Turning importance scores into a smaller network.
//!
//! A [`PruningPlan`] keeps the `k_l` highest-scoring channels of every
//! layer, [`rewrite`] slices the weights accordingly and [`finetune`]
//! retrains the result with the training optimizer on smaller batches.

mod plan;
mod rewrite;

use crate::error::Result;
use crate::network::{train, EpochStats, NetworkState, TrainConfig};
use crate::numerics::AdamConfig;
use crate::pointcloud::PointCloud;

pub use plan::{make_plan, make_plan_from_scores, top_k, LayerPlan, PruningPlan, RateMode};
pub use rewrite::{rewrite, RewriteMap};

/// Fine-tuning runs at this fraction of the training learning rate.
pub const FINETUNE_LR_FACTOR: f32 = 1.0;
pub const FINETUNE_BATCH_SIZE: usize = 8;
pub const FINETUNE_EPOCHS: usize = 20;

pub fn finetune_config(epochs: usize, seed: u64) -> TrainConfig {
    let base = TrainConfig::default();
    TrainConfig {
        epochs,
        batch_size: FINETUNE_BATCH_SIZE,
        adam: AdamConfig {
            lr: base.adam.lr * FINETUNE_LR_FACTOR,
            ..base.adam
        },
        seed,
        ..base
    }
}

/// Same contract as [`train`] with [`finetune_config`].
pub fn finetune(
    state: NetworkState,
    dataset: &[PointCloud],
    epochs: usize,
    seed: u64,
) -> Result<(NetworkState, Vec<EpochStats>)> {
    train(state, dataset, &finetune_config(epochs, seed))
}
