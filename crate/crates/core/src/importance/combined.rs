use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::LayerId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub layer: LayerId,
    pub channel: usize,
    pub base: f64,
    pub ce: f64,
    pub kr: f64,
    pub combined: f64,
    pub num_samples_used: usize,
}

/// Min-max normalization to `[0, 1]`; a constant vector maps to 0.5.
pub fn min_max_normalize(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

/// `combined = minmax(base) + ce + kr` for every channel of `layer`.
/// Pass zeros for a plug-in that is switched off or inactive.
pub fn combined_score(
    base: &[f64],
    ce: &[f64],
    kr: &[f64],
    layer: LayerId,
    num_samples_used: usize,
) -> Result<Vec<ChannelScore>> {
    if ce.len() != base.len() || kr.len() != base.len() {
        return Err(Error::LengthMismatch {
            expected: base.len(),
            actual: if ce.len() != base.len() { ce.len() } else { kr.len() },
        });
    }
    if base.iter().chain(ce).chain(kr).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("importance scores of {layer}")));
    }
    let norm = min_max_normalize(base);
    Ok((0..base.len())
        .map(|k| ChannelScore {
            layer,
            channel: k,
            base: base[k],
            ce: ce[k],
            kr: kr[k],
            combined: norm[k] + ce[k] + kr[k],
            num_samples_used,
        })
        .collect())
}
