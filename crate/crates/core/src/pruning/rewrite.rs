use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{LayerId, NetworkState, HEAD_FC1_WEIGHT};
use crate::numerics::ParamSet;
use crate::pruning::PruningPlan;

/// How the channels and input rows of the original network map onto the
/// rewritten one. New index = position in the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteMap {
    /// Surviving output channels of each prunable layer.
    pub channels: Vec<(LayerId, Vec<usize>)>,
    /// Surviving input rows of each consuming weight, keyed by parameter name.
    pub consumer_rows: Vec<(String, Vec<usize>)>,
}

/// Removes the pruned channels: their weight columns and bias entries, and
/// the matching input rows of every consumer. The three relative-coordinate
/// rows of each block's first layer always survive.
pub fn rewrite(state: &NetworkState, plan: &PruningPlan) -> Result<(NetworkState, RewriteMap)> {
    state.validate()?;
    let spec = &state.spec;
    let layers = spec.prunable_layers();
    if plan.layers.len() != layers.len() {
        return Err(Error::Structural(format!(
            "plan covers {} layers, network has {}",
            plan.layers.len(),
            layers.len()
        )));
    }
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    for id in &layers {
        let lp = plan
            .layer(*id)
            .ok_or_else(|| Error::Structural(format!("plan has no entry for {id}")))?;
        if lp.width() != spec.layer_width(*id)? {
            return Err(Error::Structural(format!(
                "plan for {id} has {} channels, layer has {}",
                lp.width(),
                spec.layer_width(*id)?
            )));
        }
        let k = lp.kept_indices();
        if k.is_empty() {
            return Err(Error::Structural(format!("plan removes every channel of {id}")));
        }
        kept.push(k);
    }

    let mut new_spec = spec.clone();
    let mut params = ParamSet::new();
    let mut map = RewriteMap {
        channels: Vec::new(),
        consumer_rows: Vec::new(),
    };
    // Rows of the next consumer: input features of block 0 plus coordinates.
    let mut in_rows: Vec<usize> = (0..spec.input_features + 3).collect();
    let mut idx = 0;
    for (b, block) in spec.blocks.iter().enumerate() {
        for l in 0..block.num_layers() {
            let id = LayerId::new(b, l);
            let cols = &kept[idx];
            let w = state.weight(id)?.select_rows(&in_rows)?.select_columns(cols)?;
            let bias = state.bias(id)?.select_columns(cols)?;
            map.consumer_rows.push((id.weight_key(), in_rows.clone()));
            map.channels.push((id, cols.clone()));
            params.insert(id.weight_key(), w);
            params.insert(id.bias_key(), bias);
            new_spec.blocks[b].mlp[l + 1] = cols.len();
            in_rows = cols.clone();
            idx += 1;
        }
        // the next block sees [features ; xyz]
        let c_out = block.out_channels();
        in_rows.extend(c_out..c_out + 3);
        if b + 1 < spec.blocks.len() {
            new_spec.blocks[b + 1].mlp[0] = in_rows.len();
        }
    }
    let head_rows: Vec<usize> = in_rows[..in_rows.len() - 3].to_vec();
    params.insert(
        HEAD_FC1_WEIGHT.to_string(),
        state.params.get(HEAD_FC1_WEIGHT)?.select_rows(&head_rows)?,
    );
    map.consumer_rows.push((HEAD_FC1_WEIGHT.to_string(), head_rows));
    for (key, t) in state.params.iter() {
        if key.starts_with("head.") && key != HEAD_FC1_WEIGHT {
            params.insert(key.clone(), t.clone());
        }
    }
    let out = NetworkState::from_parts(new_spec, params)?;
    Ok((out, map))
}
