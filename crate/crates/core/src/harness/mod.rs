//! Experiment drivers and their tabular outputs.
//!
//! Every study runs sequentially over `seeds x rates x pruners x plugins`
//! and emits rows in that order, so identical configs produce identical
//! files. FLOP figures always come from [`count_flops`] on the rewritten
//! spec.

mod config;
mod studies;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::checkpoint::{load_checkpoint, save_checkpoint};
use crate::network::{count_flops, pct_drop, train, NetworkSpec, NetworkState, TrainConfig};
use crate::numerics::rng::derive_seed;
use crate::pointcloud::io::read_split;
use crate::pointcloud::{generate_dataset, PointCloud};

pub use config::{DataConfig, ExperimentConfig, ABLATION_RATES, EXPERIMENTS, ORDERING_RATES};
pub use studies::{
    ablation_rows, layer_rates, ordering_rows, run_ablation, run_layer_rates_report,
    run_ordering_study, run_variance_study, variance_study, LayerRateRow, Ordering,
    VarianceReport, VarianceRow, VarianceSummary,
};

pub const SPLITS: [&str; 3] = ["train", "test", "score"];

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<PointCloud>,
    pub test: Vec<PointCloud>,
    /// Held-out split used only for importance scoring.
    pub score: Vec<PointCloud>,
}

/// Generates the three splits of `data`, each from its own seed stream.
pub fn generate_splits(data: &DataConfig) -> Result<Splits> {
    let gen = |name: &str, n: usize| {
        generate_dataset(derive_seed(data.seed, name), n, data.points_per_cloud)
    };
    Ok(Splits {
        train: gen("train", data.train_samples)?,
        test: gen("test", data.test_samples)?,
        score: gen("score", data.score_samples)?,
    })
}

pub fn load_splits(cfg: &ExperimentConfig) -> Result<Splits> {
    match &cfg.dataset {
        None => generate_splits(&cfg.data),
        Some(dir) => Ok(Splits {
            train: read_split(dir, "train")?.1,
            test: read_split(dir, "test")?.1,
            score: read_split(dir, "score")?.1,
        }),
    }
}

pub fn baseline_train_config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        seed: derive_seed(seed, "train"),
        ..TrainConfig::default()
    }
}

/// Initializes and trains the unpruned network for `seed`.
pub fn train_baseline(spec: &NetworkSpec, train_set: &[PointCloud], epochs: usize, seed: u64) -> Result<NetworkState> {
    let init = NetworkState::init(spec.clone(), derive_seed(seed, "init"))?;
    Ok(train(init, train_set, &baseline_train_config(epochs, seed))?.0)
}

/// Loads the configured baseline of every seed, training (and saving under
/// `out/checkpoints`) the ones without a checkpoint entry.
pub fn prepare_baselines(cfg: &ExperimentConfig, splits: &Splits) -> Result<Vec<(u64, NetworkState)>> {
    cfg.seeds
        .iter()
        .map(|&seed| {
            let state = match cfg.checkpoints.get(&seed) {
                Some(path) => load_checkpoint(path)?,
                None => {
                    log::info!("training baseline for seed {seed}");
                    let st = train_baseline(&cfg.network, &splits.train, cfg.train_epochs, seed)?;
                    let dir = cfg.out.join("checkpoints");
                    std::fs::create_dir_all(&dir)?;
                    save_checkpoint(&st, &dir.join(format!("baseline-seed{seed}.json")))?;
                    st
                }
            };
            Ok((seed, state))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub seed: u64,
    pub rate: f64,
    pub pruner: String,
    pub plugin: String,
    pub oa: f64,
    pub macc: f64,
    pub params: u64,
    pub flops: u64,
    pub flop_reduction_pct: f64,
}

const RESULT_HEADER: [&str; 10] = [
    "experiment",
    "seed",
    "rate",
    "pruner",
    "plugin",
    "oa",
    "macc",
    "params",
    "flops",
    "flop_reduction_pct",
];

/// Rows as CSV. Floats use the shortest round-trip representation.
pub fn write_rows_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(RESULT_HEADER)?;
    for r in rows {
        wr.write_record([
            r.experiment.clone(),
            r.seed.to_string(),
            r.rate.to_string(),
            r.pruner.clone(),
            r.plugin.clone(),
            r.oa.to_string(),
            r.macc.to_string(),
            r.params.to_string(),
            r.flops.to_string(),
            r.flop_reduction_pct.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or_default().to_string();
        let num = |i: usize| -> Result<f64> {
            f(i).parse()
                .map_err(|_| Error::InvalidInput(format!("column {} is not numeric", RESULT_HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            f(i).parse()
                .map_err(|_| Error::InvalidInput(format!("column {} is not an integer", RESULT_HEADER[i])))
        };
        rows.push(ResultRow {
            experiment: f(0),
            seed: int(1)?,
            rate: num(2)?,
            pruner: f(3),
            plugin: f(4),
            oa: num(5)?,
            macc: num(6)?,
            params: int(7)?,
            flops: int(8)?,
            flop_reduction_pct: num(9)?,
        });
    }
    Ok(rows)
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn save_rows(rows: &[ResultRow], stem: &Path) -> Result<()> {
    if let Some(dir) = stem.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_rows_csv(rows, std::fs::File::create(stem.with_extension("csv"))?)?;
    std::fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(rows)?)?;
    Ok(())
}

/// One line of a compression table: an affine layer, the interior subtotal
/// or the whole network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionRow {
    pub name: String,
    pub flops_before: u64,
    pub flops_after: u64,
    pub reduction_pct: f64,
    pub params_before: u64,
    pub params_after: u64,
}

/// FLOPs and parameters of every affine layer before and after pruning,
/// followed by `interior` and `total` rows.
pub fn compression_table(before: &NetworkSpec, after: &NetworkSpec, points: usize) -> Result<Vec<CompressionRow>> {
    let a = count_flops(before, points)?;
    let b = count_flops(after, points)?;
    if a.layers.len() != b.layers.len() {
        return Err(Error::Structural("specs differ in depth".into()));
    }
    let mut rows: Vec<CompressionRow> = a
        .layers
        .iter()
        .zip(&b.layers)
        .filter(|(x, _)| x.params > 0)
        .map(|(x, y)| CompressionRow {
            name: x.name.clone(),
            flops_before: x.flops,
            flops_after: y.flops,
            reduction_pct: pct_drop(y.flops, x.flops),
            params_before: x.params,
            params_after: y.params,
        })
        .collect();
    let sum_params = |r: &crate::network::FlopsReport| -> u64 {
        r.layers.iter().filter(|l| l.interior).map(|l| l.params).sum()
    };
    rows.push(CompressionRow {
        name: "interior".into(),
        flops_before: a.interior_flops(),
        flops_after: b.interior_flops(),
        reduction_pct: b.interior_reduction_pct(&a),
        params_before: sum_params(&a),
        params_after: sum_params(&b),
    });
    rows.push(CompressionRow {
        name: "total".into(),
        flops_before: a.total_flops,
        flops_after: b.total_flops,
        reduction_pct: b.reduction_pct(&a),
        params_before: a.total_params,
        params_after: b.total_params,
    });
    Ok(rows)
}

pub fn write_compression_csv<W: Write>(rows: &[CompressionRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "name",
        "flops_before",
        "flops_after",
        "reduction_pct",
        "params_before",
        "params_after",
    ])?;
    for r in rows {
        wr.write_record([
            r.name.clone(),
            r.flops_before.to_string(),
            r.flops_after.to_string(),
            r.reduction_pct.to_string(),
            r.params_before.to_string(),
            r.params_after.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
