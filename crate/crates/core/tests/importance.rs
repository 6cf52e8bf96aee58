mod support;

use pointprune::importance::{
    base_score_chip, base_score_l1, base_score_rank, ce_score, combined_score, kr_score,
    record_traces, score_network, BasePruner, ImportanceReport, Plugin, RANK_TOLERANCE,
};
use pointprune::network::{HeadSpec, LayerId, NetworkSpec, NetworkState, SaBlockSpec};
use pointprune::numerics::Tensor;
use pointprune::pointcloud::PointCloud;
use proptest::prelude::*;
use rand::Rng;
use support::*;

fn tiny_state(seed: u64) -> NetworkState {
    let mut st = NetworkState::init(two_block_spec(), seed).unwrap();
    let mut r = rng(seed ^ 77);
    for (_, t) in st.params.iter_mut() {
        if t.rank() == 1 {
            for v in t.data_mut() {
                *v = r.gen_range(0.0..0.2);
            }
        }
    }
    st
}

fn clouds(seed: u64, n: usize) -> Vec<PointCloud> {
    let mut r = rng(seed);
    (0..n).map(|i| random_cloud(&mut r, 16, i % 3)).collect()
}

#[test]
fn kr_inactive_without_downsampling() {
    let spec = NetworkSpec {
        input_features: 0,
        blocks: vec![SaBlockSpec { n_out: 16, radius: 0.5, group_size: 4, mlp: vec![3, 4] }],
        head: HeadSpec { hidden: 2, num_classes: 3 },
    };
    let st = NetworkState::init(spec, 1).unwrap();
    let traces = record_traces(&st, &clouds(1, 3)).unwrap();
    let kr = kr_score(&st, &traces, 0).unwrap();
    assert!(!kr.active);
    assert_eq!(kr.samples_used, 0);
    assert!(kr.per_layer[0].iter().all(|&v| v == 0.0));
    let rep = score_network(&st, &clouds(1, 3), BasePruner::L1, Plugin::Cp3, 0).unwrap();
    assert_eq!(rep.meta.kr_inactive_layers, vec![LayerId::new(0, 0)]);
}

#[test]
fn kr_of_feature_passthrough_block_is_one() {
    // Each point carries feature x + 10; the block copies the feature and
    // the radius only admits the point itself.
    let spec = NetworkSpec {
        input_features: 1,
        blocks: vec![SaBlockSpec { n_out: 4, radius: 1e-4, group_size: 1, mlp: vec![4, 1] }],
        head: HeadSpec { hidden: 1, num_classes: 2 },
    };
    let mut st = NetworkState::init(spec, 0).unwrap();
    *st.params.get_mut("sa0.mlp0.weight").unwrap() = Tensor::new(vec![4, 1], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let mut r = rng(3);
    let samples: Vec<PointCloud> = (0..3)
        .map(|_| {
            let pts = random_coords(&mut r, 10);
            let f = Tensor::new(vec![10, 1], pts.iter().map(|p| p[0] + 10.0).collect()).unwrap();
            PointCloud::new(to_tensor(&pts), Some(f), 0).unwrap()
        })
        .collect();
    let traces = record_traces(&st, &samples).unwrap();
    let kr = kr_score(&st, &traces, 0).unwrap();
    assert!(kr.active);
    assert_eq!(kr.samples_used, 3);
    assert!((kr.per_layer[0][0] - 1.0).abs() < 1e-9, "{:?}", kr.per_layer);
}

#[test]
fn kr_matches_hand_recomputed_discarded_forward() {
    let st = tiny_state(4);
    let samples = clouds(4, 2);
    let traces = record_traces(&st, &samples).unwrap();
    for block in 0..2 {
        let bspec = &st.spec.blocks[block];
        let mut want = vec![vec![0.0; 0]; bspec.num_layers()];
        for (l, w) in want.iter_mut().enumerate() {
            *w = vec![0.0; bspec.mlp[l + 1]];
        }
        let mut used = 0;
        for t in &traces {
            let tr = &t[block];
            let dis = &tr.sample.discarded_indices;
            if dis.len() < 2 {
                continue;
            }
            used += 1;
            let pts: Vec<[f32; 3]> = (0..tr.input_coords.rows())
                .map(|i| {
                    let p = tr.input_coords.row(i);
                    [p[0], p[1], p[2]]
                })
                .collect();
            let groups = naive_ball_query(&pts, dis, bspec.radius, bspec.group_size);
            for l in 0..bspec.num_layers() {
                let width = bspec.mlp[l + 1];
                // per discarded point, neighbor max of layer l
                let mut fmap: Vec<Vec<f64>> = Vec::new();
                for (ci, group) in dis.iter().zip(&groups) {
                    let mut best = vec![f64::NEG_INFINITY; width];
                    for &j in group {
                        let mut x: Vec<f64> = tr
                            .input_features
                            .as_ref()
                            .map(|f| f.row(j).iter().map(|&v| v as f64).collect())
                            .unwrap_or_default();
                        for a in 0..3 {
                            x.push((pts[j][a] - pts[*ci][a]) as f64);
                        }
                        for ll in 0..=l {
                            let id = LayerId::new(block, ll);
                            let w = st.weight(id).unwrap();
                            let b = st.bias(id).unwrap();
                            x = (0..b.len())
                                .map(|k| {
                                    let z: f64 = b.data()[k] as f64
                                        + (0..x.len()).map(|d| x[d] * w.at2(d, k) as f64).sum::<f64>();
                                    z.max(0.0)
                                })
                                .collect();
                        }
                        for k in 0..width {
                            best[k] = best[k].max(x[k]);
                        }
                    }
                    fmap.push(best);
                }
                for k in 0..width {
                    let ch: Vec<f64> = fmap.iter().map(|f| f[k]).collect();
                    let ce = (0..3)
                        .map(|a| {
                            let ax: Vec<f64> = dis.iter().map(|&i| pts[i][a] as f64).collect();
                            pearson64(&ch, &ax).abs()
                        })
                        .fold(0.0, f64::max);
                    want[l][k] += ce;
                }
            }
        }
        let got = kr_score(&st, &traces, block).unwrap();
        assert_eq!(got.samples_used, used);
        for (gl, wl) in got.per_layer.iter().zip(&want) {
            for (g, w) in gl.iter().zip(wl) {
                assert!((g - w / used as f64).abs() < 1e-4, "block {block}: {g} vs {}", w / used as f64);
            }
        }
    }
}

#[test]
fn kr_is_observation_only() {
    let st = tiny_state(6);
    let before = st.clone();
    let traces = record_traces(&st, &clouds(6, 3)).unwrap();
    let maps: Vec<Tensor> = traces.iter().map(|t| t[1].feature_map.clone()).collect();
    kr_score(&st, &traces, 1).unwrap();
    assert!(st.params.bit_eq(&before.params));
    for (t, m) in traces.iter().zip(&maps) {
        assert!(t[1].feature_map.bit_eq(m));
    }
}

#[test]
fn trace_with_inconsistent_discards_is_rejected() {
    let st = tiny_state(2);
    let mut traces = record_traces(&st, &clouds(2, 1)).unwrap();
    traces[0][1].sample.discarded_indices.clear();
    assert!(matches!(
        kr_score(&st, &traces, 1),
        Err(pointprune::error::Error::Trace(_))
    ));
}

#[test]
fn base_metric_examples() {
    let mut st = tiny_state(1);
    let id = LayerId::new(0, 1);
    let w = st.params.get_mut(&id.weight_key()).unwrap();
    let cols = w.cols();
    for i in 0..w.rows() {
        w.data_mut()[i * cols] = 0.0;
    }
    let s1 = base_score_l1(&st, id).unwrap();
    assert_eq!(s1[0], 0.0);
    st.params.get_mut(&id.weight_key()).unwrap().scale(2.0);
    let s2 = base_score_l1(&st, id).unwrap();
    for (a, b) in s1.iter().zip(&s2) {
        assert!((2.0 * a - b).abs() < 1e-9);
    }

    // rank of zero and of an outer product
    let (m, g) = (4, 5);
    let mut act = vec![0.0f32; m * g * 2];
    for i in 0..m {
        for j in 0..g {
            act[(i * g + j) * 2 + 1] = (i as f32 + 1.0) * (j as f32 - 2.5);
        }
    }
    let tr = single_trace(Tensor::new(vec![m, g, 2], act).unwrap(), Tensor::zeros(&[m, 2]));
    assert_eq!(base_score_rank(&[vec![tr]], LayerId::new(0, 0), RANK_TOLERANCE).unwrap(), vec![0.0, 1.0]);

    // one channel: drop equals the row norm; duplicated rows score equally
    let fm = Tensor::new(vec![2, 1], vec![3.0, 4.0]).unwrap();
    let tr = single_trace(Tensor::zeros(&[2, 1, 1]), fm);
    assert!((base_score_chip(&[vec![tr]], LayerId::new(0, 0)).unwrap()[0] - 5.0).abs() < 1e-9);
    let fm = Tensor::from_rows(&[vec![1.0, 1.0, 0.6], vec![2.0, 2.0, -1.6], vec![0.5, 0.5, 0.3]]).unwrap();
    let tr = single_trace(Tensor::zeros(&[3, 1, 3]), fm);
    let s = base_score_chip(&[vec![tr]], LayerId::new(0, 0)).unwrap();
    assert!((s[0] - s[1]).abs() < 1e-9);
}

fn single_trace(activation: Tensor, feature_map: Tensor) -> pointprune::network::LayerTrace {
    let m = feature_map.rows();
    pointprune::network::LayerTrace {
        block: 0,
        sample: pointprune::pointcloud::SampleResult {
            sampled_indices: (0..m).collect(),
            discarded_indices: vec![],
        },
        input_coords: Tensor::zeros(&[m, 3]),
        input_features: None,
        centroid_coords: Tensor::zeros(&[m, 3]),
        activations: vec![activation],
        feature_map,
    }
}

#[test]
fn report_covers_every_channel_and_round_trips() {
    let st = tiny_state(3);
    let samples = clouds(3, 4);
    for pruner in BasePruner::ALL {
        for plugin in Plugin::ALL {
            let rep = score_network(&st, &samples, pruner, plugin, 9).unwrap();
            let mut expected = Vec::new();
            for id in st.spec.prunable_layers() {
                for k in 0..st.spec.layer_width(id).unwrap() {
                    expected.push((id, k));
                }
            }
            let got: Vec<_> = rep.scores.iter().map(|s| (s.layer, s.channel)).collect();
            assert_eq!(got, expected);
            for s in &rep.scores {
                assert!((0.0..=1.0).contains(&s.ce) && (0.0..=1.0).contains(&s.kr));
                if !plugin.uses_ce() {
                    assert_eq!(s.ce, 0.0);
                }
                if !plugin.uses_kr() {
                    assert_eq!(s.kr, 0.0);
                }
            }
            let again = score_network(&st, &samples, pruner, plugin, 9).unwrap();
            assert_eq!(rep, again);
        }
    }
    let rep = score_network(&st, &samples, BasePruner::Chip, Plugin::Cp3, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("scores");
    rep.save(&stem).unwrap();
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert!(csv.starts_with("layer,channel,base,ce,kr,combined\nsa0.mlp0,0,"));
    assert_eq!(csv.lines().count(), rep.scores.len() + 1);
    assert_eq!(ImportanceReport::load(&stem.with_extension("json")).unwrap(), rep);
}

#[test]
fn combined_reduces_to_single_term_rankings() {
    let base = [0.3, 2.0, 1.1, 0.7];
    let zero = [0.0; 4];
    let c = combined_score(&base, &zero, &zero, LayerId::new(0, 0), 1).unwrap();
    assert_eq!(argsort(&c.iter().map(|s| s.combined).collect::<Vec<_>>()), argsort(&base));
    let ce = [0.2, 0.9, 0.1, 0.5];
    let c = combined_score(&[1.0; 4], &ce, &zero, LayerId::new(0, 0), 1).unwrap();
    assert_eq!(argsort(&c.iter().map(|s| s.combined).collect::<Vec<_>>()), argsort(&ce));
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

proptest! {
    #[test]
    fn ce_is_invariant_under_positive_affine_maps(
        vals in prop::collection::vec(-1.0f32..1.0, 8),
        seed in 0u64..1000,
        a in 0.5f32..2.0,
        b in -1.0f32..1.0,
    ) {
        let coords = to_tensor(&random_coords(&mut rng(seed), 8));
        let f = Tensor::new(vec![8, 1], vals.clone()).unwrap();
        let g = Tensor::new(vec![8, 1], vals.iter().map(|v| a * v + b).collect()).unwrap();
        let s = ce_score(&f, &coords).unwrap()[0];
        let t = ce_score(&g, &coords).unwrap()[0];
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s - t).abs() < 1e-6, "{} vs {}", s, t);
    }

    #[test]
    fn ce_is_invariant_under_joint_row_permutation(
        vals in prop::collection::vec(-1.0f32..1.0, 12),
        seed in 0u64..1000,
        perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let pts = random_coords(&mut rng(seed), 6);
        let f = Tensor::new(vec![6, 2], vals.clone()).unwrap();
        let pf: Vec<f32> = perm.iter().flat_map(|&i| vals[i * 2..i * 2 + 2].to_vec()).collect();
        let pp: Vec<[f32; 3]> = perm.iter().map(|&i| pts[i]).collect();
        let s = ce_score(&f, &to_tensor(&pts)).unwrap();
        let t = ce_score(&Tensor::new(vec![6, 2], pf).unwrap(), &to_tensor(&pp)).unwrap();
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn combined_ranking_ignores_base_scale(
        base in prop::collection::vec(0.0f64..10.0, 6),
        ce in prop::collection::vec(0.0f64..1.0, 6),
        kr in prop::collection::vec(0.0f64..1.0, 6),
        scale in 0.01f64..100.0,
    ) {
        let id = LayerId::new(1, 0);
        let a = combined_score(&base, &ce, &kr, id, 1).unwrap();
        let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let b = combined_score(&scaled, &ce, &kr, id, 1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.combined - y.combined).abs() < 1e-9);
        }
    }
}
