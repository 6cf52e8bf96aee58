use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::forward::ForwardPass;
use crate::network::{
    forward, forward_pass, LayerId, NetworkState, HEAD_FC1_BIAS, HEAD_FC1_WEIGHT, HEAD_FC2_BIAS,
    HEAD_FC2_WEIGHT,
};
use crate::numerics::rng::seeded;
use crate::numerics::{
    adam_step, affine_backward, neighbor_max_backward, relu_backward, softmax_cross_entropy,
    AdamConfig, Gradients, OptimizerState, Tensor,
};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    #[serde(default)]
    pub schedule: LrSchedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 16,
            adam: AdamConfig::default(),
            schedule: LrSchedule::Cosine,
            seed: 0,
        }
    }
}

/// Per-epoch learning-rate multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half cosine from 1 at the first epoch down to 0.05 at the last.
    Cosine,
}

impl LrSchedule {
    pub fn factor(self, epoch: usize, epochs: usize) -> f32 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine if epochs <= 1 => 1.0,
            LrSchedule::Cosine => {
                let t = epoch as f64 / (epochs - 1) as f64;
                let floor = 0.05;
                (floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())) as f32
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f32,
    /// Fraction of training samples classified correctly during the epoch.
    pub accuracy: f32,
}

/// Mean cross-entropy over `batch` and its gradient with respect to every
/// parameter. `fps_starts[i]` is the sampling start for `batch[i]`.
pub fn batch_loss_and_gradients(
    state: &NetworkState,
    batch: &[&PointCloud],
    fps_starts: &[usize],
) -> Result<(f32, Gradients, Vec<Tensor>)> {
    if batch.is_empty() || batch.len() != fps_starts.len() {
        return Err(Error::InvalidInput("batch and start lists must be non-empty and equal".into()));
    }
    let passes = batch
        .iter()
        .zip(fps_starts)
        .map(|(cloud, &s)| forward_pass(state, cloud, s))
        .collect::<Result<Vec<_>>>()?;
    let classes = state.spec.head.num_classes;
    let mut stacked = Vec::with_capacity(batch.len() * classes);
    for p in &passes {
        stacked.extend_from_slice(p.logits.data());
    }
    let logits = Tensor::new(vec![batch.len(), classes], stacked)?;
    let labels: Vec<usize> = batch.iter().map(|c| c.label).collect();
    let (loss, dlogits) = softmax_cross_entropy(&logits, &labels)?;

    let mut grads = state.params.zeros_like();
    for (i, pass) in passes.iter().enumerate() {
        let d = Tensor::new(vec![1, classes], dlogits.row(i).to_vec())?;
        backward(state, pass, &d, &mut grads)?;
    }
    let per_sample = passes.into_iter().map(|p| p.logits).collect();
    Ok((loss, grads, per_sample))
}

fn accumulate(grads: &mut Gradients, key: &str, t: &Tensor) -> Result<()> {
    grads.get_mut(key)?.axpy(1.0, t)
}

fn backward(state: &NetworkState, pass: &ForwardPass, dlogits: &Tensor, grads: &mut Gradients) -> Result<()> {
    let p = &state.params;
    let fc2 = affine_backward(&pass.hidden, p.get(HEAD_FC2_WEIGHT)?, dlogits, true)?;
    accumulate(grads, HEAD_FC2_WEIGHT, &fc2.weight)?;
    accumulate(grads, HEAD_FC2_BIAS, &fc2.bias)?;
    let dz1 = relu_backward(&pass.hidden, &fc2.input.unwrap())?;
    let fc1 = affine_backward(&pass.pooled, p.get(HEAD_FC1_WEIGHT)?, &dz1, true)?;
    accumulate(grads, HEAD_FC1_WEIGHT, &fc1.weight)?;
    accumulate(grads, HEAD_FC1_BIAS, &fc1.bias)?;

    let last = &pass.blocks.last().unwrap().output;
    let m_last = last.shape()[0];
    let mut d_features = neighbor_max_backward(&fc1.input.unwrap(), &pass.pool_argmax, m_last)?
        .reshape(last.shape().to_vec())?;

    for (b, bp) in pass.blocks.iter().enumerate().rev() {
        let spec = &state.spec.blocks[b];
        let c_in = state.spec.block_in_channels(b);
        let mut d = neighbor_max_backward(&d_features, &bp.argmax, spec.group_size)?;
        for l in (0..spec.num_layers()).rev() {
            let id = LayerId::new(b, l);
            let dz = relu_backward(&bp.activations[l], &d)?;
            let input = if l == 0 {
                &bp.grouping.grouped_input
            } else {
                &bp.activations[l - 1]
            };
            let need_input = l > 0 || (b > 0 && c_in > 0);
            let g = affine_backward(input, state.weight(id)?, &dz, need_input)?;
            accumulate(grads, &id.weight_key(), &g.weight)?;
            accumulate(grads, &id.bias_key(), &g.bias)?;
            match g.input {
                Some(dx) => d = dx,
                None => break,
            }
        }
        if b == 0 {
            break;
        }
        // scatter the feature part of the grouped-input gradient back onto
        // the previous block's output rows
        let prev = &pass.blocks[b - 1].output;
        let mut dprev = vec![0.0f32; prev.len()];
        let width = c_in + 3;
        for (r, &j) in bp.grouping.neighbors.iter().enumerate() {
            let src = &d.data()[r * width..r * width + c_in];
            let dst = &mut dprev[j * c_in..(j + 1) * c_in];
            for (a, &v) in dst.iter_mut().zip(src) {
                *a += v;
            }
        }
        d_features = Tensor::new(prev.shape().to_vec(), dprev)?;
    }
    Ok(())
}

/// Mini-batch Adam training with seeded shuffling and seeded sampling starts.
pub fn train(
    mut state: NetworkState,
    dataset: &[PointCloud],
    config: &TrainConfig,
) -> Result<(NetworkState, Vec<EpochStats>)> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be positive".into()));
    }
    state.validate()?;
    let mut rng = seeded(config.seed);
    let mut opt = OptimizerState::new(config.adam, &state.params);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        opt.config.lr = config.adam.lr * config.schedule.factor(epoch, config.epochs);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&PointCloud> = chunk.iter().map(|&i| &dataset[i]).collect();
            let starts: Vec<usize> = batch
                .iter()
                .map(|c| rng.gen_range(0..c.num_points()))
                .collect();
            let (loss, grads, logits) = match batch_loss_and_gradients(&state, &batch, &starts) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    return Err(Error::Diverged {
                        epoch,
                        loss: f32::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss as f64 * batch.len() as f64;
            correct += logits
                .iter()
                .zip(&batch)
                .filter(|(l, c)| argmax(l.data()) == c.label)
                .count();
            let (params, next) = adam_step(opt, state.params, &grads)?;
            state.params = params;
            opt = next;
        }
        let stats = EpochStats {
            epoch,
            loss: (loss_sum / dataset.len() as f64) as f32,
            accuracy: correct as f32 / dataset.len() as f32,
        };
        log::debug!("epoch {epoch}: loss {:.4} acc {:.3}", stats.loss, stats.accuracy);
        curve.push(stats);
    }
    Ok((state, curve))
}

pub(crate) fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Overall accuracy and mean per-class accuracy, both in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub oa: f64,
    pub macc: f64,
    pub per_class: Vec<f64>,
    pub num_samples: usize,
}

pub fn evaluate(state: &NetworkState, dataset: &[PointCloud]) -> Result<EvalMetrics> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("evaluation set is empty".into()));
    }
    let classes = state.spec.head.num_classes;
    let mut hits = vec![0usize; classes];
    let mut totals = vec![0usize; classes];
    for cloud in dataset {
        let (logits, _) = forward(state, cloud, false)?;
        if cloud.label >= classes {
            return Err(Error::LabelOutOfRange {
                label: cloud.label,
                classes,
            });
        }
        totals[cloud.label] += 1;
        if argmax(logits.data()) == cloud.label {
            hits[cloud.label] += 1;
        }
    }
    let per_class: Vec<f64> = hits
        .iter()
        .zip(&totals)
        .filter(|(_, &t)| t > 0)
        .map(|(&h, &t)| 100.0 * h as f64 / t as f64)
        .collect();
    let oa = 100.0 * hits.iter().sum::<usize>() as f64 / dataset.len() as f64;
    let macc = per_class.iter().sum::<f64>() / per_class.len() as f64;
    Ok(EvalMetrics {
        oa,
        macc,
        per_class,
        num_samples: dataset.len(),
    })
}
