use crate::error::{Error, Result};
use crate::network::{
    LayerId, NetworkState, HEAD_FC1_BIAS, HEAD_FC1_WEIGHT, HEAD_FC2_BIAS, HEAD_FC2_WEIGHT,
};
use crate::numerics::{affine_forward, neighbor_max_reduce, relu_forward, Tensor};
use crate::pointcloud::{ball_query_group, farthest_point_sample, Grouping, PointCloud, SampleResult};

/// Everything one SA block computed for one sample.
#[derive(Debug, Clone)]
pub struct BlockPass {
    pub sample: SampleResult,
    pub grouping: Grouping,
    pub centroid_coords: Tensor,
    /// Post-ReLU output of every MLP layer, each `[m x g x w]`.
    pub activations: Vec<Tensor>,
    pub argmax: Vec<u32>,
    /// `[m x c_out]` neighbor-max of the last activation.
    pub output: Tensor,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub blocks: Vec<BlockPass>,
    pub pooled: Tensor,
    pub pool_argmax: Vec<u32>,
    pub hidden: Tensor,
    /// `[1 x num_classes]`.
    pub logits: Tensor,
}

/// Per-block, per-sample forward record used by the importance metrics.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub block: usize,
    /// Centroids (selection order) and discarded points, as indices into
    /// this block's input point set.
    pub sample: SampleResult,
    /// Coordinates of this block's input points.
    pub input_coords: Tensor,
    /// Features of this block's input points, if any.
    pub input_features: Option<Tensor>,
    /// `[m x 3]`, row `i` is the centroid that produced feature-map row `i`.
    pub centroid_coords: Tensor,
    /// Pre-reduction activations of every MLP layer, each `[m x g x w]`.
    pub activations: Vec<Tensor>,
    /// Post-reduction feature map `[m x c_out]`.
    pub feature_map: Tensor,
}

impl LayerTrace {
    pub fn centroid_indices(&self) -> &[usize] {
        &self.sample.sampled_indices
    }

    pub fn discarded_coords(&self) -> Result<Option<Tensor>> {
        if self.sample.discarded_indices.is_empty() {
            return Ok(None);
        }
        self.input_coords
            .select_rows(&self.sample.discarded_indices)
            .map(Some)
    }

    /// `[m x w]` per-centroid map of MLP layer `layer`: the neighbor max of
    /// its activations. For the last layer this is `feature_map`.
    pub fn layer_feature_map(&self, layer: usize) -> Result<Tensor> {
        let act = self
            .activations
            .get(layer)
            .ok_or_else(|| Error::Trace(format!("trace has no layer {layer}")))?;
        if layer + 1 == self.activations.len() {
            return Ok(self.feature_map.clone());
        }
        Ok(neighbor_max_reduce(act)?.0)
    }
}

/// Classifies one cloud, with farthest point sampling started at index 0.
///
/// Returns `[num_classes]` logits and, when `record` is set, one trace per
/// block.
pub fn forward(
    state: &NetworkState,
    cloud: &PointCloud,
    record: bool,
) -> Result<(Tensor, Option<Vec<LayerTrace>>)> {
    let pass = forward_pass(state, cloud, 0)?;
    let logits = Tensor::new(vec![pass.logits.len()], pass.logits.data().to_vec())?;
    let traces = record.then(|| traces_from_pass(cloud, pass));
    Ok((logits, traces))
}

fn traces_from_pass(cloud: &PointCloud, pass: ForwardPass) -> Vec<LayerTrace> {
    let mut traces: Vec<LayerTrace> = Vec::with_capacity(pass.blocks.len());
    for (b, bp) in pass.blocks.into_iter().enumerate() {
        let (input_coords, input_features) = match traces.last() {
            None => (cloud.coords.clone(), cloud.features.clone()),
            Some(prev) => (prev.centroid_coords.clone(), Some(prev.feature_map.clone())),
        };
        traces.push(LayerTrace {
            block: b,
            sample: bp.sample,
            input_coords,
            input_features,
            centroid_coords: bp.centroid_coords,
            activations: bp.activations,
            feature_map: bp.output,
        });
    }
    traces
}

/// Runs one SA block's shared MLP and reduction on an already grouped input.
pub(crate) fn block_mlp(
    state: &NetworkState,
    block: usize,
    grouped: &Tensor,
) -> Result<(Vec<Tensor>, Tensor, Vec<u32>)> {
    let spec = &state.spec.blocks[block];
    let mut activations = Vec::with_capacity(spec.num_layers());
    let mut x = grouped;
    for l in 0..spec.num_layers() {
        let id = LayerId::new(block, l);
        let z = affine_forward(x, state.weight(id)?, state.bias(id)?)
            .map_err(|e| Error::Structural(format!("{id}: {e}")))?;
        activations.push(relu_forward(&z));
        x = activations.last().unwrap();
    }
    let (output, argmax) = neighbor_max_reduce(activations.last().unwrap())?;
    Ok((activations, output, argmax))
}

/// Full forward pass keeping every intermediate needed for backprop.
pub fn forward_pass(state: &NetworkState, cloud: &PointCloud, fps_start: usize) -> Result<ForwardPass> {
    state.validate()?;
    let spec = &state.spec;
    if cloud.feature_dim() != spec.input_features {
        return Err(Error::Structural(format!(
            "cloud has {} feature channels, network expects {}",
            cloud.feature_dim(),
            spec.input_features
        )));
    }
    if cloud.num_points() < spec.blocks[0].n_out {
        return Err(Error::InvalidInput(format!(
            "cloud has {} points, first block samples {}",
            cloud.num_points(),
            spec.blocks[0].n_out
        )));
    }

    let mut blocks: Vec<BlockPass> = Vec::with_capacity(spec.blocks.len());
    for (b, bspec) in spec.blocks.iter().enumerate() {
        let (coords, features, start) = match blocks.last() {
            None => (&cloud.coords, cloud.features.as_ref(), fps_start),
            Some(prev) => (&prev.centroid_coords, Some(&prev.output), 0),
        };
        let sample = farthest_point_sample(coords, bspec.n_out, start)?;
        let grouping = ball_query_group(
            coords,
            features,
            &sample.sampled_indices,
            bspec.radius,
            bspec.group_size,
        )?;
        let centroid_coords = coords.select_rows(&sample.sampled_indices)?;
        let (activations, output, argmax) = block_mlp(state, b, &grouping.grouped_input)?;
        blocks.push(BlockPass {
            sample,
            grouping,
            centroid_coords,
            activations,
            argmax,
            output,
        });
    }

    let last = &blocks.last().unwrap().output;
    let (m, c) = (last.shape()[0], last.shape()[1]);
    let (pooled, pool_argmax) = neighbor_max_reduce(&last.clone().reshape(vec![1, m, c])?)?;
    let p = &state.params;
    let hidden = relu_forward(&affine_forward(
        &pooled,
        p.get(HEAD_FC1_WEIGHT)?,
        p.get(HEAD_FC1_BIAS)?,
    )?);
    let logits = affine_forward(&hidden, p.get(HEAD_FC2_WEIGHT)?, p.get(HEAD_FC2_BIAS)?)?;
    Ok(ForwardPass {
        blocks,
        pooled,
        pool_argmax,
        hidden,
        logits,
    })
}
