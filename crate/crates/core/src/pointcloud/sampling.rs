use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Outcome of farthest point sampling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    /// Selected indices in selection order (the first is the start index).
    pub sampled_indices: Vec<usize>,
    /// The remaining indices, ascending.
    pub discarded_indices: Vec<usize>,
}

/// Greedy farthest point sampling on `[n x 3]` coordinates.
///
/// Starting from `start_index`, repeatedly adds the point whose squared
/// distance to the selected set is largest; ties go to the smaller index.
pub fn farthest_point_sample(coords: &Tensor, m: usize, start_index: usize) -> Result<SampleResult> {
    if coords.rank() != 2 || coords.cols() != 3 {
        return Err(Error::Dimension {
            op: "farthest_point_sample",
            left: coords.shape().to_vec(),
            right: vec![coords.rows(), 3],
        });
    }
    let n = coords.rows();
    if m == 0 || m > n {
        return Err(Error::Count {
            requested: m,
            available: n,
        });
    }
    if start_index >= n {
        return Err(Error::InvalidInput(format!(
            "start index {start_index} out of range for {n} points"
        )));
    }
    let pts = coords.data();
    let mut min_d2 = vec![f32::INFINITY; n];
    let mut chosen = vec![false; n];
    let mut sampled = Vec::with_capacity(m);
    let mut current = start_index;
    for _ in 0..m {
        sampled.push(current);
        chosen[current] = true;
        let c = &pts[current * 3..current * 3 + 3];
        let mut best = usize::MAX;
        let mut best_d2 = f32::NEG_INFINITY;
        for (i, d) in min_d2.iter_mut().enumerate() {
            let p = &pts[i * 3..i * 3 + 3];
            let dx = p[0] - c[0];
            let dy = p[1] - c[1];
            let dz = p[2] - c[2];
            let d2 = dx * dx + dy * dy + dz * dz;
            if d2 < *d {
                *d = d2;
            }
            if !chosen[i] && *d > best_d2 {
                best_d2 = *d;
                best = i;
            }
        }
        current = best;
    }
    let discarded_indices = (0..n).filter(|&i| !chosen[i]).collect();
    Ok(SampleResult {
        sampled_indices: sampled,
        discarded_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_selection_has_no_discards() {
        let t = Tensor::new(vec![4, 3], (0..12).map(|v| v as f32).collect()).unwrap();
        let r = farthest_point_sample(&t, 4, 2).unwrap();
        let mut s = r.sampled_indices.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3]);
        assert!(r.discarded_indices.is_empty());
        assert_eq!(r.sampled_indices[0], 2);
    }

    #[test]
    fn collinear_farthest() {
        let t = Tensor::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.1, 0.0, 0.0],
        ])
        .unwrap();
        let r = farthest_point_sample(&t, 2, 0).unwrap();
        assert_eq!(r.sampled_indices, vec![0, 1]);
        assert_eq!(r.discarded_indices, vec![2]);
    }

    #[test]
    fn ties_go_to_smaller_index() {
        let t = Tensor::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
        ])
        .unwrap();
        let r = farthest_point_sample(&t, 2, 0).unwrap();
        assert_eq!(r.sampled_indices, vec![0, 1]);
    }

    #[test]
    fn count_error() {
        let t = Tensor::zeros(&[3, 3]);
        assert!(matches!(
            farthest_point_sample(&t, 4, 0),
            Err(Error::Count { requested: 4, available: 3 })
        ));
    }
}
