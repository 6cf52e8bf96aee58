//! `pointprune` command-line entry point.
//!
//! Every subcommand prints a JSON summary on stdout. Failures exit with
//! status 1 and print `{"error": {"kind": ..., "message": ...}}` on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pointprune::error::{Error, Result};
use pointprune::harness::{
    compression_table, generate_splits, layer_rates, run_ablation, run_layer_rates_report,
    baseline_train_config, run_ordering_study, run_variance_study, write_compression_csv,
    DataConfig, ExperimentConfig,
};
use pointprune::importance::{score_network, BasePruner, ImportanceReport, Plugin};
use pointprune::network::checkpoint::{load_checkpoint, save_checkpoint};
use pointprune::network::{evaluate, train, EpochStats, NetworkSpec, NetworkState};
use pointprune::numerics::rng::derive_seed;
use pointprune::pointcloud::io::{read_split, write_split};
use pointprune::pointcloud::PointCloud;
use pointprune::pruning::{finetune, make_plan, rewrite, RateMode, FINETUNE_EPOCHS};
use serde_json::json;

#[derive(Parser)]
#[command(name = "pointprune", version, about = "Channel pruning for point-set classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train, test and score splits of the synthetic shape task.
    GenData {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long, default_value_t = 800)]
        train: usize,
        #[arg(long, default_value_t = 400)]
        test: usize,
        #[arg(long, default_value_t = 256)]
        score: usize,
    },
    /// Train the default classifier on a dataset's train split.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Checkpoint manifest to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
    },
    /// Score every prunable channel on the dataset's score split.
    Score {
        #[command(flatten)]
        scoring: Scoring,
        /// Output stem; `.csv` and `.json` are appended.
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan, rewrite and save a pruned network.
    Prune {
        #[command(flatten)]
        scoring: Scoring,
        /// Use a saved importance report instead of scoring.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        rate: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune a (pruned) checkpoint with the fine-tuning recipe.
    Finetune {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = FINETUNE_EPOCHS)]
        epochs: usize,
    },
    /// Report OA and mAcc of a checkpoint on a split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Run one of the registered experiments.
    Study {
        #[command(subcommand)]
        which: Study,
    },
}

#[derive(Args)]
struct Scoring {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "chip")]
    pruner: String,
    #[arg(long, default_value = "cp3")]
    plugin: String,
}

#[derive(Subcommand)]
enum Study {
    Ordering(StudyArgs),
    Ablation(StudyArgs),
    Variance(StudyArgs),
    LayerRates {
        /// Plan written by `prune`.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct StudyArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long)]
    rate: Vec<f64>,
    #[arg(long)]
    pruner: Vec<String>,
    #[arg(long)]
    plugin: Vec<String>,
    /// Baseline checkpoint, used for every seed.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StudyArgs {
    fn resolve(self, experiment: &str) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::named(experiment),
        };
        cfg.experiment = experiment.to_string();
        if !self.seed.is_empty() {
            cfg.seeds = self.seed;
        }
        if !self.rate.is_empty() {
            cfg.rates = Some(self.rate);
        }
        if !self.pruner.is_empty() {
            cfg.pruners = self.pruner.iter().map(|p| BasePruner::parse(p)).collect::<Result<_>>()?;
        }
        if !self.plugin.is_empty() {
            cfg.plugins = self.plugin.iter().map(|p| Plugin::parse(p)).collect::<Result<_>>()?;
        }
        if let Some(c) = self.checkpoint {
            cfg.checkpoints = cfg.seeds.iter().map(|&s| (s, c.clone())).collect();
        }
        if self.dataset.is_some() {
            cfg.dataset = self.dataset;
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn split(dir: &Path, name: &str) -> Result<Vec<PointCloud>> {
    Ok(read_split(dir, name)?.1)
}

/// Loss curve as `epoch,loss,accuracy`.
fn write_curve(curve: &[EpochStats], path: &Path) -> Result<()> {
    let mut text = String::from("epoch,loss,accuracy\n");
    for e in curve {
        text.push_str(&format!("{},{},{}\n", e.epoch, e.loss, e.accuracy));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn score_from(s: &Scoring) -> Result<ImportanceReport> {
    let dataset = s
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("scoring needs --dataset".into()))?;
    let state = load_checkpoint(&s.checkpoint)?;
    let (manifest, clouds) = read_split(dataset, "score")?;
    score_network(
        &state,
        &clouds,
        BasePruner::parse(&s.pruner)?,
        Plugin::parse(&s.plugin)?,
        manifest.seed,
    )
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::GenData { seed, out, points, train, test, score } => {
            let data = DataConfig {
                seed,
                points_per_cloud: points,
                train_samples: train,
                test_samples: test,
                score_samples: score,
            };
            let splits = generate_splits(&data)?;
            std::fs::create_dir_all(&out)?;
            write_split(&out, "train", seed, &splits.train)?;
            write_split(&out, "test", seed, &splits.test)?;
            write_split(&out, "score", seed, &splits.score)?;
            Ok(json!({ "dataset": out, "train": train, "test": test, "score": score }))
        }
        Command::Train { dataset, out, seed, epochs } => {
            let train_set = split(&dataset, "train")?;
            let init = NetworkState::init(NetworkSpec::default_classifier(), derive_seed(seed, "init"))?;
            let (state, curve) = train(init, &train_set, &baseline_train_config(epochs, seed))?;
            save_checkpoint(&state, &out)?;
            let curve_path = out.with_extension("curve.csv");
            write_curve(&curve, &curve_path)?;
            let m = evaluate(&state, &train_set)?;
            Ok(json!({ "checkpoint": out, "curve": curve_path, "train_oa": m.oa, "train_macc": m.macc }))
        }
        Command::Score { scoring, out } => {
            let report = score_from(&scoring)?;
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            report.save(&out)?;
            Ok(json!({ "report": report.meta, "channels": report.scores.len() }))
        }
        Command::Prune { scoring, report, rate, out } => {
            let report = match report {
                Some(p) => ImportanceReport::load(&p)?,
                None => score_from(&scoring)?,
            };
            let state = load_checkpoint(&scoring.checkpoint)?;
            let plan = make_plan(&report, &RateMode::Uniform(rate))?;
            let (pruned, _) = rewrite(&state, &plan)?;
            std::fs::create_dir_all(&out)?;
            plan.save(&out.join("plan.json"))?;
            save_checkpoint(&pruned, &out.join("pruned.json"))?;
            let points = match &scoring.dataset {
                Some(d) => read_split(d, "test")?.0.points_per_cloud,
                None => DataConfig::default().points_per_cloud,
            };
            let table = compression_table(&state.spec, &pruned.spec, points)?;
            write_compression_csv(&table, std::fs::File::create(out.join("compression.csv"))?)?;
            let total = table.last().expect("table has a total row");
            Ok(json!({
                "plan": out.join("plan.json"),
                "checkpoint": out.join("pruned.json"),
                "flop_reduction_pct": total.reduction_pct,
                "layers": layer_rates(&plan),
            }))
        }
        Command::Finetune { checkpoint, dataset, out, seed, epochs } => {
            let state = load_checkpoint(&checkpoint)?;
            let (tuned, curve) = finetune(state, &split(&dataset, "train")?, epochs, seed)?;
            save_checkpoint(&tuned, &out)?;
            let curve_path = out.with_extension("curve.csv");
            write_curve(&curve, &curve_path)?;
            Ok(json!({ "checkpoint": out, "curve": curve_path }))
        }
        Command::Eval { checkpoint, dataset, split: name } => {
            let state = load_checkpoint(&checkpoint)?;
            let m = evaluate(&state, &split(&dataset, &name)?)?;
            Ok(serde_json::to_value(m)?)
        }
        Command::Study { which } => match which {
            Study::Ordering(a) => {
                let cfg = a.resolve("ordering")?;
                let rows = run_ordering_study(&cfg)?;
                Ok(json!({ "rows": rows.len(), "csv": cfg.out.join("ordering.csv") }))
            }
            Study::Ablation(a) => {
                let cfg = a.resolve("ablation")?;
                let rows = run_ablation(&cfg)?;
                Ok(json!({ "rows": rows.len(), "csv": cfg.out.join("ablation.csv") }))
            }
            Study::Variance(a) => {
                let cfg = a.resolve("variance")?;
                let rep = run_variance_study(&cfg)?;
                Ok(json!({ "summaries": rep.summaries, "csv": cfg.out.join("variance.csv") }))
            }
            Study::LayerRates { plan, out } => {
                let cfg = ExperimentConfig {
                    experiment: "layer-rates".into(),
                    plan: Some(plan),
                    out: out.clone(),
                    ..ExperimentConfig::default()
                };
                let rows = run_layer_rates_report(&cfg)?;
                Ok(json!({ "layers": rows, "csv": out.join("layer_rates.csv") }))
            }
        },
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string()),
    };
    match run(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
