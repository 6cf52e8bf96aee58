//! Channel importance.
//!
//! Every prunable channel gets a base score (L1 norm, feature-map rank or
//! channel independence), a coordinate-enhancement score (CE) and a
//! knowledge-recycling score (KR). The pruning criterion is
//! `minmax(base) + ce + kr` within each layer.
//!
//! CE is the absolute Pearson correlation between a channel's per-centroid
//! values and the centroid coordinates, maximized over the x, y and z axes
//! and averaged over scoring samples. KR is the same quantity computed on
//! the points a block's sampling discarded: they are grouped against the
//! block's input set and pushed through the block's MLP. For a block's
//! inner MLP layers the per-centroid map is the neighbor max of that
//! layer's activations.

mod base;
mod ce;
mod combined;
mod kr;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{forward, LayerId, LayerTrace, NetworkState};
use crate::numerics::rng::mix64;
use crate::pointcloud::PointCloud;

pub use base::{base_score_chip, base_score_l1, base_score_rank, BasePruner, RANK_TOLERANCE};
pub use ce::ce_score;
pub use combined::{combined_score, min_max_normalize, ChannelScore};
pub use kr::{kr_sample_scores, kr_score, KrScores};

/// Number of samples in the default scoring split.
pub const SCORING_SAMPLES: usize = 256;

/// The traces of every block for one sample.
pub type SampleTraces = Vec<LayerTrace>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plugin {
    None,
    Ce,
    Kr,
    /// CE and KR together.
    Cp3,
}

impl Plugin {
    pub const ALL: [Plugin; 4] = [Plugin::None, Plugin::Ce, Plugin::Kr, Plugin::Cp3];

    pub fn name(self) -> &'static str {
        match self {
            Plugin::None => "none",
            Plugin::Ce => "ce",
            Plugin::Kr => "kr",
            Plugin::Cp3 => "cp3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ce+kr" => Ok(Plugin::Cp3),
            _ => Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
                Error::Config(format!("unknown plugin `{s}` (expected none, ce, kr, cp3)"))
            }),
        }
    }

    pub fn uses_ce(self) -> bool {
        matches!(self, Plugin::Ce | Plugin::Cp3)
    }

    pub fn uses_kr(self) -> bool {
        matches!(self, Plugin::Kr | Plugin::Cp3)
    }
}

/// Runs the network over `clouds` with tracing on.
pub fn record_traces(state: &NetworkState, clouds: &[PointCloud]) -> Result<Vec<SampleTraces>> {
    clouds
        .iter()
        .map(|c| Ok(forward(state, c, true)?.1.expect("tracing requested")))
        .collect()
}

/// Per-sample CE vectors of `layer`, indexed `[sample][channel]`.
pub fn ce_scores_per_sample(traces: &[SampleTraces], layer: LayerId) -> Result<Vec<Vec<f64>>> {
    traces
        .iter()
        .map(|t| {
            let tr = t
                .get(layer.block)
                .ok_or_else(|| Error::Trace(format!("traces do not cover block {}", layer.block)))?;
            ce_score(&tr.layer_feature_map(layer.layer)?, &tr.centroid_coords)
        })
        .collect()
}

/// CE of `layer` averaged over samples.
pub fn ce_score_layer(traces: &[SampleTraces], layer: LayerId) -> Result<Vec<f64>> {
    let per = ce_scores_per_sample(traces, layer)?;
    if per.is_empty() {
        return Err(Error::Trace("no traces".into()));
    }
    let mut mean = vec![0.0; per[0].len()];
    for s in &per {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= per.len() as f64;
    }
    Ok(mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub id: String,
    pub pruner: BasePruner,
    pub plugin: Plugin,
    pub dataset_seed: u64,
    pub sample_count: usize,
    /// Layers whose KR term was requested but had no discarded points.
    pub kr_inactive_layers: Vec<LayerId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub meta: ReportMeta,
    /// One entry per prunable channel, in network then channel order.
    pub scores: Vec<ChannelScore>,
}

/// Scores every prunable channel of `state` on `clouds`.
pub fn score_network(
    state: &NetworkState,
    clouds: &[PointCloud],
    pruner: BasePruner,
    plugin: Plugin,
    dataset_seed: u64,
) -> Result<ImportanceReport> {
    if clouds.is_empty() {
        return Err(Error::InvalidInput("scoring split is empty".into()));
    }
    let traces = record_traces(state, clouds)?;
    score_traces(state, &traces, pruner, plugin, dataset_seed)
}

/// As [`score_network`] on already recorded traces.
pub fn score_traces(
    state: &NetworkState,
    traces: &[SampleTraces],
    pruner: BasePruner,
    plugin: Plugin,
    dataset_seed: u64,
) -> Result<ImportanceReport> {
    let mut scores = Vec::new();
    let mut inactive = Vec::new();
    for (b, block) in state.spec.blocks.iter().enumerate() {
        let kr = if plugin.uses_kr() {
            Some(kr_score(state, traces, b)?)
        } else {
            None
        };
        for l in 0..block.num_layers() {
            let id = LayerId::new(b, l);
            let width = block.mlp[l + 1];
            let base = match pruner {
                BasePruner::L1 => base_score_l1(state, id)?,
                BasePruner::Rank => base_score_rank(traces, id, RANK_TOLERANCE)?,
                BasePruner::Chip => base_score_chip(traces, id)?,
            };
            let ce = if plugin.uses_ce() {
                ce_score_layer(traces, id)?
            } else {
                vec![0.0; width]
            };
            let krv = match &kr {
                Some(k) if k.active => k.per_layer[l].clone(),
                Some(_) => {
                    inactive.push(id);
                    vec![0.0; width]
                }
                None => vec![0.0; width],
            };
            scores.extend(combined_score(&base, &ce, &krv, id, traces.len())?);
        }
    }
    let mut h = mix64(dataset_seed ^ traces.len() as u64);
    for s in &scores {
        h = mix64(h ^ s.combined.to_bits());
    }
    Ok(ImportanceReport {
        meta: ReportMeta {
            id: format!("{}-{}-{:016x}", pruner.name(), plugin.name(), h),
            pruner,
            plugin,
            dataset_seed,
            sample_count: traces.len(),
            kr_inactive_layers: inactive,
        },
        scores,
    })
}

impl ImportanceReport {
    /// Combined scores of one layer in channel order.
    pub fn layer_combined(&self, layer: LayerId) -> Vec<f64> {
        self.scores
            .iter()
            .filter(|s| s.layer == layer)
            .map(|s| s.combined)
            .collect()
    }

    pub fn layers(&self) -> Vec<LayerId> {
        let mut v: Vec<LayerId> = self.scores.iter().map(|s| s.layer).collect();
        v.dedup();
        v
    }

    /// CSV with columns `layer, channel, base, ce, kr, combined`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["layer", "channel", "base", "ce", "kr", "combined"])?;
        for s in &self.scores {
            wr.write_record([
                s.layer.to_string(),
                s.channel.to_string(),
                format!("{:.9}", s.base),
                format!("{:.9}", s.ce),
                format!("{:.9}", s.kr),
                format!("{:.9}", s.combined),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and the JSON twin `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(stem.with_extension("csv"))?)?;
        std::fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
