//! Seeded random instances checked against straightforward reference
//! implementations.

mod support;

use pointprune::importance::{base_score_chip, base_score_l1, base_score_rank, ce_score, RANK_TOLERANCE};
use pointprune::network::{LayerId, LayerTrace, NetworkState};
use pointprune::numerics::Tensor;
use pointprune::pointcloud::{ball_query_group, farthest_point_sample, SampleResult};
use rand::Rng;
use support::*;

const INSTANCES: u64 = 120;

#[test]
fn fps_matches_greedy_oracle_for_every_start() {
    let mut checked = 0;
    for case in 0..INSTANCES {
        let mut r = rng(case);
        let n = r.gen_range(1..=8);
        let pts = random_coords(&mut r, n);
        let t = to_tensor(&pts);
        let m = r.gen_range(1..=n);
        for start in 0..n {
            let got = farthest_point_sample(&t, m, start).unwrap();
            let want = naive_fps(&pts, m, start);
            assert_eq!(got.sampled_indices, want, "case {case} start {start}");
            let mut rest: Vec<usize> = (0..n).filter(|i| !want.contains(i)).collect();
            rest.sort_unstable();
            assert_eq!(got.discarded_indices, rest);
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

#[test]
fn ball_query_matches_all_pairs_filter() {
    for case in 0..INSTANCES {
        let mut r = rng(500 + case);
        let n = r.gen_range(1..=20);
        let pts = random_coords(&mut r, n);
        let m = r.gen_range(1..=n);
        let centroids: Vec<usize> = (0..m).map(|_| r.gen_range(0..n)).collect();
        let radius = r.gen_range(0.05..2.0);
        let g = r.gen_range(1..=6);
        let c = r.gen_range(0..=2);
        let feats = (c > 0).then(|| {
            Tensor::new(vec![n, c], (0..n * c).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
        });
        let got = ball_query_group(&to_tensor(&pts), feats.as_ref(), &centroids, radius, g).unwrap();
        let want = naive_ball_query(&pts, &centroids, radius, g);
        for (i, w) in want.iter().enumerate() {
            assert_eq!(got.neighborhood(i), w.as_slice(), "case {case} centroid {i}");
            for (s, &j) in w.iter().enumerate() {
                let row = got.grouped_input.row(i * g + s);
                if let Some(f) = &feats {
                    assert_eq!(&row[..c], f.row(j));
                }
                for a in 0..3 {
                    assert_eq!(row[c + a], pts[j][a] - pts[centroids[i]][a]);
                }
            }
        }
    }
}

#[test]
fn ce_matches_f64_pearson() {
    for case in 0..INSTANCES {
        let mut r = rng(900 + case);
        let m = r.gen_range(2..=12);
        let c = r.gen_range(1..=4);
        let coords = random_coords(&mut r, m);
        let mut data: Vec<f32> = (0..m * c).map(|_| r.gen_range(-2.0..2.0)).collect();
        if case % 7 == 0 {
            // a constant channel
            for i in 0..m {
                data[i * c] = 0.5;
            }
        }
        let fmap = Tensor::new(vec![m, c], data.clone()).unwrap();
        let got = ce_score(&fmap, &to_tensor(&coords)).unwrap();
        for k in 0..c {
            let ch: Vec<f64> = (0..m).map(|i| data[i * c + k] as f64).collect();
            let want = (0..3)
                .map(|a| {
                    let ax: Vec<f64> = coords.iter().map(|p| p[a] as f64).collect();
                    pearson64(&ch, &ax).abs()
                })
                .fold(0.0, f64::max);
            assert!((got[k] - want).abs() < 1e-5, "case {case} channel {k}: {} vs {want}", got[k]);
            assert!((0.0..=1.0).contains(&got[k]));
        }
    }
}

/// A single-block trace carrying only what the base metrics read.
fn trace_with(activation: Tensor, feature_map: Tensor) -> LayerTrace {
    let m = feature_map.rows();
    LayerTrace {
        block: 0,
        sample: SampleResult { sampled_indices: (0..m).collect(), discarded_indices: vec![] },
        input_coords: Tensor::zeros(&[m, 3]),
        input_features: None,
        centroid_coords: Tensor::zeros(&[m, 3]),
        activations: vec![activation],
        feature_map,
    }
}

/// `[m x g]` matrix of rank at most `rank` (0 gives all zeros).
fn low_rank(r: &mut TestRng, m: usize, g: usize, rank: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * g];
    for _ in 0..rank {
        let u: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..g).map(|_| r.gen_range(-1.0..1.0)).collect();
        for i in 0..m {
            for j in 0..g {
                out[i * g + j] += u[i] * v[j];
            }
        }
    }
    out
}

#[test]
fn rank_score_matches_svd_oracle() {
    for case in 0..INSTANCES {
        let mut r = rng(1300 + case);
        let (m, g, c) = (4, 5, 3);
        let samples = r.gen_range(1..=3);
        let mut traces = Vec::new();
        let mut want = vec![0.0; c];
        for _ in 0..samples {
            let mats: Vec<Vec<f64>> = (0..c).map(|_| {
                let k = r.gen_range(0..=4);
                low_rank(&mut r, m, g, k)
            }).collect();
            let mut act = vec![0.0f32; m * g * c];
            for (k, mat) in mats.iter().enumerate() {
                for (idx, v) in mat.iter().enumerate() {
                    act[idx * c + k] = *v as f32;
                }
                let as32: Vec<f64> = mat.iter().map(|&v| v as f32 as f64).collect();
                want[k] += rank64(m, g, &as32, RANK_TOLERANCE) as f64 / samples as f64;
            }
            let activation = Tensor::new(vec![m, g, c], act).unwrap();
            let fmap = Tensor::zeros(&[m, c]);
            traces.push(vec![trace_with(activation, fmap)]);
        }
        let got = base_score_rank(&traces, LayerId::new(0, 0), RANK_TOLERANCE).unwrap();
        for k in 0..c {
            assert!((got[k] - want[k]).abs() < 1e-9, "case {case} channel {k}: {} vs {}", got[k], want[k]);
        }
    }
}

#[test]
fn chip_score_matches_singular_value_oracle() {
    for case in 0..INSTANCES {
        let mut r = rng(1700 + case);
        let c = r.gen_range(1..=4);
        let m = 3;
        let samples = 2;
        let mut traces = Vec::new();
        let mut stacked = vec![0.0f64; c * m * samples];
        for s in 0..samples {
            let data: Vec<f32> = (0..m * c).map(|_| r.gen_range(-1.0..1.0)).collect();
            for i in 0..m {
                for k in 0..c {
                    stacked[k * m * samples + s * m + i] = data[i * c + k] as f64;
                }
            }
            let fmap = Tensor::new(vec![m, c], data).unwrap();
            traces.push(vec![trace_with(Tensor::zeros(&[m, 1, c]), fmap)]);
        }
        let cols = m * samples;
        let nuc = |d: &[f64]| svd64(c, cols, d).iter().sum::<f64>();
        let full = nuc(&stacked);
        let got = base_score_chip(&traces, LayerId::new(0, 0)).unwrap();
        for k in 0..c {
            let mut z = stacked.clone();
            for v in &mut z[k * cols..(k + 1) * cols] {
                *v = 0.0;
            }
            let want = full - nuc(&z);
            assert!((got[k] - want).abs() < 1e-5, "case {case} channel {k}: {} vs {want}", got[k]);
        }
    }
}

#[test]
fn l1_score_matches_elementwise_sum() {
    for case in 0..20 {
        let mut r = rng(2100 + case);
        let spec = random_spec(&mut r, 16);
        let st = NetworkState::init(spec.clone(), case).unwrap();
        for id in spec.prunable_layers() {
            let w = st.weight(id).unwrap();
            let (rows, cols) = (w.shape()[0], w.shape()[1]);
            let got = base_score_l1(&st, id).unwrap();
            for k in 0..cols {
                let want: f64 = (0..rows).map(|i| (w.at2(i, k) as f64).abs()).sum();
                assert!((got[k] - want).abs() < 1e-9);
            }
        }
    }
}
