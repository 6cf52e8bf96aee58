//! Base channel-importance metrics that the plug-in scores augment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::importance::SampleTraces;
use crate::network::{LayerId, NetworkState};
use crate::numerics::linalg::{nuclear_norm_row_drops, numerical_rank, singular_values};

/// Relative singular-value cutoff for the rank metric.
pub const RANK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasePruner {
    /// Sum of absolute filter weights.
    L1,
    /// Mean numerical rank of the per-channel `[centroid x neighbor]`
    /// activation matrix.
    Rank,
    /// Channel independence: nuclear-norm drop when a channel is zeroed.
    Chip,
}

impl BasePruner {
    pub const ALL: [BasePruner; 3] = [BasePruner::L1, BasePruner::Rank, BasePruner::Chip];

    pub fn name(self) -> &'static str {
        match self {
            BasePruner::L1 => "l1",
            BasePruner::Rank => "rank",
            BasePruner::Chip => "chip",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown pruner `{s}` (expected l1, rank, chip)")))
    }
}

/// `score_k = sum |W[., k]|` over the weight column producing channel `k`.
pub fn base_score_l1(state: &NetworkState, layer: LayerId) -> Result<Vec<f64>> {
    let w = state.weight(layer)?;
    let d_out = w.cols();
    let mut s = vec![0.0f64; d_out];
    for row in w.data().chunks_exact(d_out) {
        for (acc, &v) in s.iter_mut().zip(row) {
            *acc += v.abs() as f64;
        }
    }
    Ok(s)
}

fn layer_traces(
    traces: &[SampleTraces],
    layer: LayerId,
) -> Result<impl Iterator<Item = &crate::network::LayerTrace>> {
    if traces.is_empty() {
        return Err(Error::Trace("no traces".into()));
    }
    if traces.iter().any(|t| t.len() <= layer.block) {
        return Err(Error::Trace(format!("traces do not cover block {}", layer.block)));
    }
    Ok(traces.iter().map(move |t| &t[layer.block]))
}

/// Per-channel numerical rank of the pre-reduction activation matrix,
/// averaged over samples.
pub fn base_score_rank(traces: &[SampleTraces], layer: LayerId, tolerance: f64) -> Result<Vec<f64>> {
    let mut sum: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for tr in layer_traces(traces, layer)? {
        let act = tr
            .activations
            .get(layer.layer)
            .ok_or_else(|| Error::Trace(format!("trace lacks activations for {layer}")))?;
        if act.rank() != 3 {
            return Err(Error::Dimension {
                op: "base_score_rank",
                left: act.shape().to_vec(),
                right: vec![0, 0, 0],
            });
        }
        let (m, g, c) = (act.shape()[0], act.shape()[1], act.shape()[2]);
        let acc = sum.get_or_insert_with(|| vec![0.0; c]);
        if acc.len() != c {
            return Err(Error::Trace(format!("inconsistent channel count for {layer}")));
        }
        let data = act.data();
        let mut mat = vec![0.0f64; m * g];
        for (k, a) in acc.iter_mut().enumerate() {
            for (r, v) in mat.iter_mut().enumerate() {
                *v = data[r * c + k] as f64;
            }
            *a += numerical_rank(&singular_values(&mat, m, g), tolerance) as f64;
        }
        count += 1;
    }
    let mut s = sum.unwrap_or_default();
    for v in &mut s {
        *v /= count as f64;
    }
    Ok(s)
}

/// Channel-independence score on the stacked per-centroid maps
/// `M [c x (m * samples)]`: `||M||_* - ||M with row k zeroed||_*`.
pub fn base_score_chip(traces: &[SampleTraces], layer: LayerId) -> Result<Vec<f64>> {
    let maps = layer_traces(traces, layer)?
        .map(|tr| tr.layer_feature_map(layer.layer))
        .collect::<Result<Vec<_>>>()?;
    let c = maps[0].cols();
    if maps.iter().any(|m| m.cols() != c) {
        return Err(Error::Trace(format!("inconsistent channel count for {layer}")));
    }
    let total_rows: usize = maps.iter().map(|m| m.rows()).sum();
    let mut stacked = vec![0.0f64; c * total_rows];
    let mut col = 0;
    for map in &maps {
        for row in map.data().chunks_exact(c) {
            for (k, &v) in row.iter().enumerate() {
                stacked[k * total_rows + col] = v as f64;
            }
            col += 1;
        }
    }
    Ok(nuclear_norm_row_drops(&stacked, c, total_rows))
}
