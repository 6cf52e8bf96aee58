use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::importance::{BasePruner, Plugin, SCORING_SAMPLES};
use crate::network::NetworkSpec;
use crate::pruning::FINETUNE_EPOCHS;

/// Experiments known to the harness.
pub const EXPERIMENTS: [&str; 4] = ["ordering", "ablation", "variance", "layer-rates"];

pub const ORDERING_RATES: [f64; 4] = [0.4, 0.5, 0.6, 0.7];
pub const ABLATION_RATES: [f64; 2] = [0.75, 0.9];

/// Sizes and seed of the generated splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub seed: u64,
    pub points_per_cloud: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub score_samples: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            points_per_cloud: 512,
            train_samples: 800,
            test_samples: 400,
            score_samples: SCORING_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seeds: Vec<u64>,
    /// Defaults to the experiment's own rate grid when absent.
    pub rates: Option<Vec<f64>>,
    pub pruners: Vec<BasePruner>,
    pub plugins: Vec<Plugin>,
    /// Directory holding `train`, `test` and `score` splits. Generated from
    /// `data` when absent.
    pub dataset: Option<PathBuf>,
    pub data: DataConfig,
    /// Trained baseline per seed. Seeds without an entry are trained.
    pub checkpoints: BTreeMap<u64, PathBuf>,
    /// Plan file read by `layer-rates`.
    pub plan: Option<PathBuf>,
    pub out: PathBuf,
    pub network: NetworkSpec,
    pub train_epochs: usize,
    pub finetune_epochs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "ordering".into(),
            seeds: vec![0, 1, 2, 3, 4],
            rates: None,
            pruners: BasePruner::ALL.to_vec(),
            plugins: Plugin::ALL.to_vec(),
            dataset: None,
            data: DataConfig::default(),
            checkpoints: BTreeMap::new(),
            plan: None,
            out: PathBuf::from("results"),
            network: NetworkSpec::default_classifier(),
            train_epochs: 60,
            finetune_epochs: FINETUNE_EPOCHS,
        }
    }
}

impl ExperimentConfig {
    pub fn named(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let cfg: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rates(&self) -> Vec<f64> {
        match (&self.rates, self.experiment.as_str()) {
            (Some(r), _) => r.clone(),
            (None, "ablation") => ABLATION_RATES.to_vec(),
            (None, _) => ORDERING_RATES.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::Config(format!(
                "unknown experiment `{}` (expected one of {EXPERIMENTS:?})",
                self.experiment
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if let Some(r) = self.rates().iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::Config(format!("rate {r} outside (0, 1)")));
        }
        if self.pruners.is_empty() || self.plugins.is_empty() {
            return Err(Error::Config("pruner and plugin lists must be non-empty".into()));
        }
        let d = &self.data;
        if d.train_samples == 0 || d.test_samples == 0 || d.score_samples == 0 {
            return Err(Error::Config("split sizes must be positive".into()));
        }
        self.network.validate()
    }
}
