use crate::error::{Error, Result};
use crate::importance::ce::ce_score;
use crate::importance::SampleTraces;
use crate::network::forward::block_mlp;
use crate::network::{LayerTrace, NetworkState};
use crate::numerics::neighbor_max_reduce;
use crate::pointcloud::ball_query_group;

/// Knowledge-recycling scores of one block, one vector per MLP layer.
#[derive(Debug, Clone, PartialEq)]
pub struct KrScores {
    pub per_layer: Vec<Vec<f64>>,
    /// False when no sample had enough discarded points; scores are then 0.
    pub active: bool,
    pub samples_used: usize,
}

fn check_trace(tr: &LayerTrace, block: usize) -> Result<()> {
    let n = tr.input_coords.rows();
    let s = &tr.sample;
    if tr.block != block
        || s.sampled_indices.len() + s.discarded_indices.len() != n
        || s.discarded_indices.iter().any(|&i| i >= n)
    {
        return Err(Error::Trace(format!(
            "trace for block {block} does not carry a consistent discarded set"
        )));
    }
    Ok(())
}

/// Per-layer CE of the block's MLP evaluated on the discarded points of one
/// sample, or `None` when fewer than two points were discarded.
pub fn kr_sample_scores(
    state: &NetworkState,
    tr: &LayerTrace,
    block: usize,
) -> Result<Option<Vec<Vec<f64>>>> {
    check_trace(tr, block)?;
    let discarded = &tr.sample.discarded_indices;
    if discarded.len() < 2 {
        return Ok(None);
    }
    let spec = state
        .spec
        .blocks
        .get(block)
        .ok_or_else(|| Error::Structural(format!("no block {block}")))?;
    let grouping = ball_query_group(
        &tr.input_coords,
        tr.input_features.as_ref(),
        discarded,
        spec.radius,
        spec.group_size,
    )?;
    let x_dis = tr.input_coords.select_rows(discarded)?;
    let (activations, output, _) = block_mlp(state, block, &grouping.grouped_input)?;
    let last = activations.len() - 1;
    let mut out = Vec::with_capacity(activations.len());
    for (l, act) in activations.iter().enumerate() {
        let map = if l == last {
            output.clone()
        } else {
            neighbor_max_reduce(act)?.0
        };
        out.push(ce_score(&map, &x_dis)?);
    }
    Ok(Some(out))
}

/// Mean over samples of the CE of the block re-run on its discarded
/// points. Samples with fewer than two discarded points are skipped.
pub fn kr_score(state: &NetworkState, traces: &[SampleTraces], block: usize) -> Result<KrScores> {
    let spec = state
        .spec
        .blocks
        .get(block)
        .ok_or_else(|| Error::Structural(format!("no block {block}")))?;
    let mut sums: Vec<Vec<f64>> = spec.mlp[1..].iter().map(|&w| vec![0.0; w]).collect();
    let mut used = 0usize;
    for t in traces {
        let tr = t
            .get(block)
            .ok_or_else(|| Error::Trace(format!("traces do not cover block {block}")))?;
        if let Some(scores) = kr_sample_scores(state, tr, block)? {
            for (acc, s) in sums.iter_mut().zip(&scores) {
                for (a, v) in acc.iter_mut().zip(s) {
                    *a += v;
                }
            }
            used += 1;
        }
    }
    if used > 0 {
        for v in sums.iter_mut().flatten() {
            *v /= used as f64;
        }
    }
    Ok(KrScores {
        per_layer: sums,
        active: used > 0,
        samples_used: used,
    })
}
