use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{load_splits, prepare_baselines, save_rows, ExperimentConfig, ResultRow, Splits};
use crate::importance::{
    ce_score_layer, ce_scores_per_sample, kr_sample_scores, record_traces, score_traces,
    SampleTraces,
};
use crate::network::{count_flops, evaluate, LayerId, NetworkState};
use crate::numerics::rng::{derive_seed, seeded};
use crate::pruning::{finetune, make_plan, make_plan_from_scores, rewrite, PruningPlan, RateMode};

/// Channel orderings compared by the ordering study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Keep the highest-CE channels.
    CeDescending,
    Random,
    /// Keep the lowest-CE channels.
    CeAscending,
}

impl Ordering {
    pub const ALL: [Ordering; 3] = [Ordering::CeDescending, Ordering::Random, Ordering::CeAscending];

    pub fn name(self) -> &'static str {
        match self {
            Ordering::CeDescending => "ce-descending",
            Ordering::Random => "random",
            Ordering::CeAscending => "ce-ascending",
        }
    }
}

/// Prunes `base` by `plan`, fine-tunes and evaluates. An identity plan is
/// evaluated as is.
#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    splits: &Splits,
    base: &NetworkState,
    plan: &PruningPlan,
    seed: u64,
    rate: f64,
    pruner: &str,
    plugin: &str,
) -> Result<ResultRow> {
    let points = splits.test[0].num_points();
    let reference = count_flops(&base.spec, points)?;
    let state = if plan.is_identity() {
        base.clone()
    } else {
        let (pruned, _) = rewrite(base, plan)?;
        finetune(pruned, &splits.train, cfg.finetune_epochs, derive_seed(seed, "finetune"))?.0
    };
    let metrics = evaluate(&state, &splits.test)?;
    let flops = count_flops(&state.spec, points)?;
    Ok(ResultRow {
        experiment: cfg.experiment.clone(),
        seed,
        rate,
        pruner: pruner.into(),
        plugin: plugin.into(),
        oa: metrics.oa,
        macc: metrics.macc,
        params: flops.total_params,
        flops: flops.total_flops,
        flop_reduction_pct: flops.reduction_pct(&reference),
    })
}

fn ordering_scores(
    ce: &[(LayerId, Vec<f64>)],
    ordering: Ordering,
    seed: u64,
    rate: f64,
) -> Vec<(LayerId, Vec<f64>)> {
    let mut rng = seeded(derive_seed(seed, &format!("random-order-{rate}")));
    ce.iter()
        .map(|(id, s)| {
            let v = match ordering {
                Ordering::CeDescending => s.clone(),
                Ordering::CeAscending => s.iter().map(|x| -x).collect(),
                Ordering::Random => s.iter().map(|_| rng.gen::<f64>()).collect(),
            };
            (*id, v)
        })
        .collect()
}

/// CE-descending, random and CE-ascending pruning at every rate, plus an
/// unpruned rate-0 row per seed.
pub fn ordering_rows(
    cfg: &ExperimentConfig,
    splits: &Splits,
    baselines: &[(u64, NetworkState)],
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (seed, base) in baselines {
        let traces = record_traces(base, &splits.score)?;
        let ce: Vec<(LayerId, Vec<f64>)> = base
            .spec
            .prunable_layers()
            .into_iter()
            .map(|id| Ok((id, ce_score_layer(&traces, id)?)))
            .collect::<Result<_>>()?;
        drop(traces);
        let identity = PruningPlan::identity(&base.spec)?;
        rows.push(run_cell(cfg, splits, base, &identity, *seed, 0.0, "baseline", "none")?);
        for rate in cfg.rates() {
            for ordering in Ordering::ALL {
                let scores = ordering_scores(&ce, ordering, *seed, rate);
                let plan = make_plan_from_scores(&scores, &RateMode::Uniform(rate), ordering.name())?;
                rows.push(run_cell(cfg, splits, base, &plan, *seed, rate, ordering.name(), "ce")?);
                log::info!("ordering seed {seed} rate {rate} {}: {:.2}", ordering.name(), rows.last().unwrap().oa);
            }
        }
    }
    Ok(rows)
}

/// Every configured pruner with every configured plug-in at every rate.
pub fn ablation_rows(
    cfg: &ExperimentConfig,
    splits: &Splits,
    baselines: &[(u64, NetworkState)],
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (seed, base) in baselines {
        let traces = record_traces(base, &splits.score)?;
        let mut reports = Vec::new();
        for &pruner in &cfg.pruners {
            for &plugin in &cfg.plugins {
                reports.push((pruner, plugin, score_traces(base, &traces, pruner, plugin, cfg.data.seed)?));
            }
        }
        drop(traces);
        for rate in cfg.rates() {
            for (pruner, plugin, report) in &reports {
                let plan = make_plan(report, &RateMode::Uniform(rate))?;
                rows.push(run_cell(cfg, splits, base, &plan, *seed, rate, pruner.name(), plugin.name())?);
                log::info!(
                    "ablation seed {seed} rate {rate} {}+{}: {:.2}",
                    pruner.name(),
                    plugin.name(),
                    rows.last().unwrap().oa
                );
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub seed: u64,
    pub channel: usize,
    /// Across-sample variance of the CE-only score.
    pub var_base: f64,
    /// Across-sample variance of the KR-augmented score `(ce + kr) / 2`.
    pub var_kr: f64,
    pub lower: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub seed: u64,
    pub layer: LayerId,
    pub samples: usize,
    pub channels: usize,
    pub fraction_lower: f64,
    /// Fewer than two samples: every variance is 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    pub summaries: Vec<VarianceSummary>,
}

fn population_variance(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = v.clone().sum::<f64>() / n as f64;
    v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64
}

/// Per-channel variance over scoring samples of the deepest layer's CE
/// score and of its KR-augmented score. Samples without KR use CE alone.
pub fn variance_study(baselines: &[(u64, NetworkState)], score: &[crate::pointcloud::PointCloud]) -> Result<VarianceReport> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (seed, state) in baselines {
        let layer = *state
            .spec
            .prunable_layers()
            .last()
            .ok_or_else(|| Error::Structural("network has no prunable layer".into()))?;
        let traces: Vec<SampleTraces> = record_traces(state, score)?;
        let ce = ce_scores_per_sample(&traces, layer)?;
        let mut aug = Vec::with_capacity(ce.len());
        for (t, c) in traces.iter().zip(&ce) {
            let kr = kr_sample_scores(state, &t[layer.block], layer.block)?;
            aug.push(match kr {
                Some(k) => c.iter().zip(&k[layer.layer]).map(|(a, b)| (a + b) / 2.0).collect(),
                None => c.clone(),
            });
        }
        let channels = ce.first().map_or(0, Vec::len);
        let mut lower = 0;
        for ch in 0..channels {
            let var_base = population_variance(ce.iter().map(|s| s[ch]));
            let var_kr = population_variance(aug.iter().map(|s: &Vec<f64>| s[ch]));
            let is_lower = var_kr < var_base;
            lower += is_lower as usize;
            rows.push(VarianceRow {
                seed: *seed,
                channel: ch,
                var_base,
                var_kr,
                lower: is_lower,
            });
        }
        let degenerate = traces.len() < 2;
        if degenerate {
            log::warn!("seed {seed}: fewer than two scoring samples, variances are degenerate");
        }
        summaries.push(VarianceSummary {
            seed: *seed,
            layer,
            samples: traces.len(),
            channels,
            fraction_lower: if degenerate || channels == 0 {
                0.0
            } else {
                lower as f64 / channels as f64
            },
            degenerate,
        });
    }
    Ok(VarianceReport { rows, summaries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRateRow {
    pub layer: LayerId,
    pub channels: usize,
    pub kept: usize,
    pub pruned_fraction: f64,
}

pub fn layer_rates(plan: &PruningPlan) -> Vec<LayerRateRow> {
    plan.layers
        .iter()
        .map(|l| LayerRateRow {
            layer: l.layer,
            channels: l.width(),
            kept: l.kept,
            pruned_fraction: l.pruned_fraction(),
        })
        .collect()
}

fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut wr = csv::Writer::from_path(path)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn prepared(cfg: &ExperimentConfig, expected: &str) -> Result<(Splits, Vec<(u64, NetworkState)>)> {
    cfg.validate()?;
    if cfg.experiment != expected {
        return Err(Error::Config(format!(
            "config names experiment `{}`, expected `{expected}`",
            cfg.experiment
        )));
    }
    for path in cfg.checkpoints.values() {
        if !path.exists() {
            return Err(Error::MissingFile(path.clone()));
        }
    }
    let splits = load_splits(cfg)?;
    let baselines = prepare_baselines(cfg, &splits)?;
    Ok((splits, baselines))
}

/// Runs the ordering study and writes `ordering.csv` and `ordering.json`.
pub fn run_ordering_study(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let (splits, baselines) = prepared(cfg, "ordering")?;
    let rows = ordering_rows(cfg, &splits, &baselines)?;
    save_rows(&rows, &cfg.out.join("ordering"))?;
    Ok(rows)
}

/// Runs the ablation grid and writes `ablation.csv` and `ablation.json`.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let (splits, baselines) = prepared(cfg, "ablation")?;
    let rows = ablation_rows(cfg, &splits, &baselines)?;
    save_rows(&rows, &cfg.out.join("ablation"))?;
    Ok(rows)
}

/// Writes `variance.csv` (per channel) and `variance_summary.json`.
pub fn run_variance_study(cfg: &ExperimentConfig) -> Result<VarianceReport> {
    let (splits, baselines) = prepared(cfg, "variance")?;
    let report = variance_study(&baselines, &splits.score)?;
    write_csv(&report.rows, &cfg.out.join("variance.csv"))?;
    std::fs::write(
        cfg.out.join("variance_summary.json"),
        serde_json::to_vec_pretty(&report.summaries)?,
    )?;
    Ok(report)
}

/// Reads the plan named in the config and writes `layer_rates.csv`.
pub fn run_layer_rates_report(cfg: &ExperimentConfig) -> Result<Vec<LayerRateRow>> {
    let path = cfg
        .plan
        .as_ref()
        .ok_or_else(|| Error::Config("layer-rates needs a plan path".into()))?;
    let rows = layer_rates(&PruningPlan::load(path)?);
    write_csv(&rows, &cfg.out.join("layer_rates.csv"))?;
    Ok(rows)
}
