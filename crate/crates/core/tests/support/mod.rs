//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::DMatrix;
use pointprune::network::{
    HeadSpec, LayerId, NetworkSpec, NetworkState, SaBlockSpec, HEAD_FC1_BIAS, HEAD_FC1_WEIGHT,
    HEAD_FC2_BIAS, HEAD_FC2_WEIGHT,
};
use pointprune::numerics::Tensor;
use pointprune::pointcloud::PointCloud;
use rand::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TestRng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

pub fn random_coords(rng: &mut TestRng, n: usize) -> Vec<[f32; 3]> {
    (0..n)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect()
}

pub fn to_tensor(pts: &[[f32; 3]]) -> Tensor {
    Tensor::new(vec![pts.len(), 3], pts.iter().flatten().copied().collect()).unwrap()
}

pub fn random_cloud(rng: &mut TestRng, n: usize, label: usize) -> PointCloud {
    PointCloud::new(to_tensor(&random_coords(rng, n)), None, label).unwrap()
}

/// Two SA blocks over 16 points, 3 classes.
pub fn two_block_spec() -> NetworkSpec {
    NetworkSpec {
        input_features: 0,
        blocks: vec![
            SaBlockSpec { n_out: 8, radius: 0.8, group_size: 4, mlp: vec![3, 5, 4] },
            SaBlockSpec { n_out: 4, radius: 1.2, group_size: 3, mlp: vec![7, 6] },
        ],
        head: HeadSpec { hidden: 6, num_classes: 3 },
    }
}

/// A random valid spec with one or two blocks and small widths.
pub fn random_spec(rng: &mut TestRng, points: usize) -> NetworkSpec {
    let nblocks = rng.gen_range(1..=2);
    let mut blocks = Vec::new();
    let mut prev_c = 0;
    let mut prev_n = points;
    for _ in 0..nblocks {
        let n_out = rng.gen_range(2..=prev_n.min(8));
        let layers = rng.gen_range(1..=3);
        let mut mlp = vec![prev_c + 3];
        for _ in 0..layers {
            mlp.push(rng.gen_range(1..=6));
        }
        prev_c = *mlp.last().unwrap();
        blocks.push(SaBlockSpec {
            n_out,
            radius: rng.gen_range(0.3..1.5),
            group_size: rng.gen_range(1..=5),
            mlp,
        });
        prev_n = n_out;
    }
    NetworkSpec {
        input_features: 0,
        blocks,
        head: HeadSpec { hidden: rng.gen_range(1..=5), num_classes: rng.gen_range(2..=4) },
    }
}

fn d2(a: [f32; 3], b: [f32; 3]) -> f32 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Greedy farthest point sampling recomputing every distance to the
/// selected set from scratch.
pub fn naive_fps(pts: &[[f32; 3]], m: usize, start: usize) -> Vec<usize> {
    let mut sel = vec![start];
    while sel.len() < m {
        let mut best: Option<(usize, f32)> = None;
        for i in 0..pts.len() {
            if sel.contains(&i) {
                continue;
            }
            let d = sel.iter().map(|&s| d2(pts[i], pts[s])).fold(f32::INFINITY, f32::min);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        sel.push(best.unwrap().0);
    }
    sel
}

/// Ball query from the full pairwise distance matrix.
pub fn naive_ball_query(pts: &[[f32; 3]], centroids: &[usize], radius: f32, g: usize) -> Vec<Vec<usize>> {
    let dist: Vec<Vec<f32>> = pts.iter().map(|a| pts.iter().map(|b| d2(*b, *a)).collect()).collect();
    centroids
        .iter()
        .map(|&c| {
            let inside: Vec<usize> = (0..pts.len()).filter(|&j| dist[c][j] <= radius * radius).collect();
            let mut group: Vec<usize> = inside.into_iter().take(g).collect();
            let pad = *group.first().unwrap_or(&c);
            group.resize(g, pad);
            group
        })
        .collect()
}

fn mat(t: &Tensor) -> Vec<Vec<f64>> {
    let c = t.cols();
    t.data().chunks(c).map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}

fn vecf(t: &Tensor) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}

/// Straight-loop forward pass in f64 that counts every arithmetic
/// operation it performs: one per multiply, add or comparison.
pub fn instrumented_forward(state: &NetworkState, pts: &[[f32; 3]]) -> (Vec<f64>, u64) {
    let mut ops = 0u64;
    let mut coords: Vec<[f32; 3]> = pts.to_vec();
    let mut feats: Vec<Vec<f64>> = vec![Vec::new(); pts.len()];
    for (b, block) in state.spec.blocks.iter().enumerate() {
        let centroids = naive_fps(&coords, block.n_out, 0);
        let groups = naive_ball_query(&coords, &centroids, block.radius, block.group_size);
        let mut out = Vec::new();
        for (ci, group) in centroids.iter().zip(&groups) {
            let c = coords[*ci];
            let mut best = vec![f64::NEG_INFINITY; block.out_channels()];
            for &j in group {
                let mut x: Vec<f64> = feats[j].clone();
                // relative coordinates are formed in f32 like the grouping step
                for a in 0..3 {
                    x.push((coords[j][a] - c[a]) as f64);
                }
                for l in 0..block.num_layers() {
                    let id = LayerId::new(b, l);
                    let w = mat(state.weight(id).unwrap());
                    let bias = vecf(state.bias(id).unwrap());
                    let mut y = Vec::with_capacity(bias.len());
                    for k in 0..bias.len() {
                        let mut acc = 0.0;
                        for d in 0..x.len() {
                            acc += x[d] * w[d][k];
                            ops += 2;
                        }
                        acc += bias[k];
                        ops += 1;
                        ops += 1;
                        y.push(if acc > 0.0 { acc } else { 0.0 });
                    }
                    x = y;
                }
                for k in 0..x.len() {
                    ops += 1;
                    if x[k] > best[k] {
                        best[k] = x[k];
                    }
                }
            }
            out.push(best);
        }
        coords = centroids.iter().map(|&i| coords[i]).collect();
        feats = out;
    }
    let cfin = feats[0].len();
    let mut pooled = vec![f64::NEG_INFINITY; cfin];
    for f in &feats {
        for k in 0..cfin {
            ops += 1;
            if f[k] > pooled[k] {
                pooled[k] = f[k];
            }
        }
    }
    let dense = |x: &[f64], w: &Tensor, b: &Tensor, relu: bool, ops: &mut u64| -> Vec<f64> {
        let w = mat(w);
        let b = vecf(b);
        (0..b.len())
            .map(|k| {
                let mut acc = 0.0;
                for d in 0..x.len() {
                    acc += x[d] * w[d][k];
                    *ops += 2;
                }
                acc += b[k];
                *ops += 1;
                if relu {
                    *ops += 1;
                    acc.max(0.0)
                } else {
                    acc
                }
            })
            .collect()
    };
    let p = &state.params;
    let h = dense(&pooled, p.get(HEAD_FC1_WEIGHT).unwrap(), p.get(HEAD_FC1_BIAS).unwrap(), true, &mut ops);
    let logits = dense(&h, p.get(HEAD_FC2_WEIGHT).unwrap(), p.get(HEAD_FC2_BIAS).unwrap(), false, &mut ops);
    (logits, ops)
}

/// Pearson correlation from textbook sums in f64; constant series give 0.
pub fn pearson64(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Singular values via nalgebra's SVD.
pub fn svd64(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, data);
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn rank64(rows: usize, cols: usize, data: &[f64], rel_tol: f64) -> usize {
    let s = svd64(rows, cols, data);
    let max = s.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * max).count()
}
