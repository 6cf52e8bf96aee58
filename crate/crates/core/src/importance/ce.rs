use crate::error::{Error, Result};
use crate::numerics::linalg::pearson;
use crate::numerics::Tensor;

/// Coordinate-enhancement score of every channel of an `[m x c]` feature
/// map against the `[m x 3]` coordinates of the points that produced it.
///
/// For channel `k` the score is `max_a |pearson(F[., k], X[., a])|` over the
/// three axes; zero-variance channels or axes contribute correlation 0.
pub fn ce_score(feature_map: &Tensor, coords: &Tensor) -> Result<Vec<f64>> {
    if feature_map.rank() != 2 || coords.rank() != 2 || coords.cols() != 3 {
        return Err(Error::Dimension {
            op: "ce_score",
            left: feature_map.shape().to_vec(),
            right: coords.shape().to_vec(),
        });
    }
    let m = feature_map.rows();
    if coords.rows() != m {
        return Err(Error::Dimension {
            op: "ce_score rows",
            left: feature_map.shape().to_vec(),
            right: coords.shape().to_vec(),
        });
    }
    if m < 2 {
        return Err(Error::InsufficientPoints(m));
    }
    let axes: Vec<Vec<f32>> = (0..3).map(|a| coords.column(a)).collect();
    Ok((0..feature_map.cols())
        .map(|k| {
            let ch = feature_map.column(k);
            axes.iter()
                .map(|ax| pearson(&ch, ax).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}
