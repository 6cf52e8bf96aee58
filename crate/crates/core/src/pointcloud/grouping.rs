use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Ball-query neighborhoods and the assembled `[m x g x (c + 3)]` block input.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// `m * g` point indices, neighborhood-major.
    pub neighbors: Vec<usize>,
    pub group_size: usize,
    /// Rows are `[features_j ; x_j - x_i]`.
    pub grouped_input: Tensor,
}

impl Grouping {
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.group_size..(i + 1) * self.group_size]
    }

    pub fn num_centroids(&self) -> usize {
        self.neighbors.len() / self.group_size
    }
}

/// Groups up to `g` points within `radius` of each centroid, in ascending
/// index order. Short neighborhoods are padded by repeating the first found
/// index (the centroid itself when nothing else qualifies).
pub fn ball_query_group(
    coords: &Tensor,
    features: Option<&Tensor>,
    centroid_indices: &[usize],
    radius: f32,
    g: usize,
) -> Result<Grouping> {
    if coords.rank() != 2 || coords.cols() != 3 {
        return Err(Error::Dimension {
            op: "ball_query_group",
            left: coords.shape().to_vec(),
            right: vec![coords.rows(), 3],
        });
    }
    let n = coords.rows();
    if n == 0 || centroid_indices.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    if !(radius > 0.0) || g == 0 {
        return Err(Error::InvalidInput(format!(
            "ball query needs radius > 0 and g >= 1, got {radius}, {g}"
        )));
    }
    let c = match features {
        Some(f) if f.rows() != n => {
            return Err(Error::Dimension {
                op: "ball_query_group features",
                left: f.shape().to_vec(),
                right: coords.shape().to_vec(),
            })
        }
        Some(f) => f.cols(),
        None => 0,
    };
    let pts = coords.data();
    let r2 = radius * radius;
    let m = centroid_indices.len();
    let width = c + 3;
    let mut neighbors = Vec::with_capacity(m * g);
    let mut grouped = Vec::with_capacity(m * g * width);
    for &ci in centroid_indices {
        if ci >= n {
            return Err(Error::InvalidInput(format!(
                "centroid index {ci} out of range for {n} points"
            )));
        }
        let center = &pts[ci * 3..ci * 3 + 3];
        let start = neighbors.len();
        for j in 0..n {
            let p = &pts[j * 3..j * 3 + 3];
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            let dz = p[2] - center[2];
            if dx * dx + dy * dy + dz * dz <= r2 {
                neighbors.push(j);
                if neighbors.len() - start == g {
                    break;
                }
            }
        }
        let pad = if neighbors.len() > start {
            neighbors[start]
        } else {
            ci
        };
        neighbors.resize(start + g, pad);
        for &j in &neighbors[start..] {
            if let Some(f) = features {
                grouped.extend_from_slice(f.row(j));
            }
            let p = &pts[j * 3..j * 3 + 3];
            grouped.extend_from_slice(&[p[0] - center[0], p[1] - center[1], p[2] - center[2]]);
        }
    }
    Ok(Grouping {
        neighbors,
        group_size: g,
        grouped_input: Tensor::new(vec![m, g, width], grouped)?,
    })
}
