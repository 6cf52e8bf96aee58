use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::importance::ImportanceReport;
use crate::network::{LayerId, NetworkSpec};

/// How many channels each layer gives up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "rates")]
pub enum RateMode {
    /// The same channel rate in every layer.
    Uniform(f64),
    /// An explicit rate for every prunable layer.
    PerLayer(BTreeMap<LayerId, f64>),
}

impl RateMode {
    fn rate_for(&self, layer: LayerId) -> Result<f64> {
        let r = match self {
            RateMode::Uniform(r) => *r,
            RateMode::PerLayer(m) => *m
                .get(&layer)
                .ok_or_else(|| Error::Config(format!("no pruning rate given for {layer}")))?,
        };
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("pruning rate {r} for {layer} outside [0, 1]")));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub layer: LayerId,
    /// `true` = kept. Serialized as a string of `0`/`1`, channel 0 first.
    #[serde(with = "mask_string")]
    pub mask: Vec<bool>,
    pub kept: usize,
    pub rate: f64,
}

impl LayerPlan {
    pub fn width(&self) -> usize {
        self.mask.len()
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }

    pub fn pruned_fraction(&self) -> f64 {
        1.0 - self.kept as f64 / self.width() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningPlan {
    pub report_id: String,
    pub rates: RateMode,
    pub layers: Vec<LayerPlan>,
    /// Layers whose rate would have removed every channel.
    pub warnings: Vec<String>,
}

mod mask_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mask: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&mask.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        String::deserialize(d)?
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(D::Error::custom(format!("mask character `{other}`"))),
            })
            .collect()
    }
}

/// Indices of the `k` largest scores; ties keep the smaller index. Returned
/// ascending.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep = order[..k.min(scores.len())].to_vec();
    keep.sort_unstable();
    keep
}

/// Builds a plan from per-layer scores. Higher scores are kept.
pub fn make_plan_from_scores(
    scores: &[(LayerId, Vec<f64>)],
    rates: &RateMode,
    report_id: &str,
) -> Result<PruningPlan> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no layers to plan".into()));
    }
    let mut layers = Vec::with_capacity(scores.len());
    let mut warnings = Vec::new();
    for (layer, s) in scores {
        if s.is_empty() {
            return Err(Error::Structural(format!("{layer} has no channels")));
        }
        if s.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite(format!("scores of {layer}")));
        }
        let rate = rates.rate_for(*layer)?;
        let c = s.len();
        let raw = ((1.0 - rate) * c as f64).round() as usize;
        let k = if raw == 0 {
            let msg = format!("{layer}: rate {rate} keeps no channel of {c}, keeping 1");
            log::warn!("{msg}");
            warnings.push(msg);
            1
        } else {
            raw.min(c)
        };
        let mut mask = vec![false; c];
        for i in top_k(s, k) {
            mask[i] = true;
        }
        layers.push(LayerPlan {
            layer: *layer,
            mask,
            kept: k,
            rate,
        });
    }
    Ok(PruningPlan {
        report_id: report_id.to_string(),
        rates: rates.clone(),
        layers,
        warnings,
    })
}

/// Keeps the top `k_l = max(1, round((1 - rate) * c_l))` channels of each
/// layer by combined score.
pub fn make_plan(report: &ImportanceReport, rates: &RateMode) -> Result<PruningPlan> {
    let scores: Vec<(LayerId, Vec<f64>)> = report
        .layers()
        .into_iter()
        .map(|l| (l, report.layer_combined(l)))
        .collect();
    make_plan_from_scores(&scores, rates, &report.meta.id)
}

impl PruningPlan {
    /// A plan keeping every channel of `spec`.
    pub fn identity(spec: &NetworkSpec) -> Result<Self> {
        let scores: Vec<(LayerId, Vec<f64>)> = spec
            .prunable_layers()
            .into_iter()
            .map(|l| Ok((l, vec![0.0; spec.layer_width(l)?])))
            .collect::<Result<_>>()?;
        make_plan_from_scores(&scores, &RateMode::Uniform(0.0), "identity")
    }

    pub fn layer(&self, id: LayerId) -> Option<&LayerPlan> {
        self.layers.iter().find(|l| l.layer == id)
    }

    pub fn is_identity(&self) -> bool {
        self.layers.iter().all(|l| l.kept == l.width())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let plan: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        for l in &plan.layers {
            if l.mask.iter().filter(|&&b| b).count() != l.kept || l.kept == 0 {
                return Err(Error::Structural(format!(
                    "{}: mask keeps a different number of channels than k = {}",
                    l.layer, l.kept
                )));
            }
        }
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_keeps_smaller_index() {
        let s = vec![(LayerId::new(0, 0), vec![0.9, 0.1, 0.5, 0.5])];
        let p = make_plan_from_scores(&s, &RateMode::Uniform(0.5), "t").unwrap();
        assert_eq!(p.layers[0].kept_indices(), vec![0, 2]);
    }

    #[test]
    fn full_rate_clamps_to_one() {
        let s = vec![(LayerId::new(0, 0), vec![0.1, 0.3])];
        let p = make_plan_from_scores(&s, &RateMode::Uniform(1.0), "t").unwrap();
        assert_eq!(p.layers[0].kept_indices(), vec![1]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn mask_serializes_as_bits() {
        let s = vec![(LayerId::new(1, 0), vec![0.9, 0.1, 0.5])];
        let p = make_plan_from_scores(&s, &RateMode::Uniform(0.34), "r").unwrap();
        let j = serde_json::to_string(&p).unwrap();
        assert!(j.contains("\"mask\":\"101\""), "{j}");
        let back: PruningPlan = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn bad_rates_error() {
        let s = vec![(LayerId::new(0, 0), vec![0.1])];
        assert!(make_plan_from_scores(&s, &RateMode::Uniform(1.5), "t").is_err());
        let per = RateMode::PerLayer(BTreeMap::new());
        assert!(matches!(make_plan_from_scores(&s, &per, "t"), Err(Error::Config(_))));
    }
}
