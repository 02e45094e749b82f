//! Run configuration: JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use flowsentinel_core::dataset::{schema, ClassificationMode, NormScheme};
use flowsentinel_core::features::ForestConfig;
use flowsentinel_core::models::Architecture;
use flowsentinel_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// CSV files or directories read by `ingest`.
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    /// Defaults to `<out>/dataset.fsds`.
    pub cache: Option<PathBuf>,
    /// Defaults to `<out>/model.fsnn`.
    pub model: Option<PathBuf>,
    /// `ingest` defaults to binary; later commands follow the cache.
    pub mode: Option<ClassificationMode>,
    pub arch: Architecture,
    /// Drives subsampling, the forest, the train/test split and training.
    pub seed: u64,
    pub subsample: f64,
    pub label_column: String,
    pub strict_labels: bool,
    pub top_k: usize,
    pub recompute_importance: bool,
    /// Explicit model inputs; otherwise `<out>/features.txt` when present,
    /// else the canonical list.
    pub features: Option<Vec<String>>,
    pub forest: ForestConfig,
    pub split_fraction: f64,
    pub normalization: NormScheme,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            out: PathBuf::from("out"),
            cache: None,
            model: None,
            mode: None,
            arch: Architecture::Cnn,
            seed: 42,
            subsample: 1.0,
            label_column: schema::DEFAULT_LABEL_COLUMN.into(),
            strict_labels: false,
            top_k: 20,
            recompute_importance: false,
            features: None,
            forest: ForestConfig {
                max_samples: Some(100_000),
                ..ForestConfig::default()
            },
            split_fraction: 0.8,
            normalization: NormScheme::MinMax,
            train: TrainConfig::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub mode: Option<ClassificationMode>,
    pub arch: Option<Architecture>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub top_k: Option<usize>,
    pub recompute_importance: bool,
    pub subsample: Option<f64>,
}

impl RunConfig {
    /// Reads a run config, or the `config` section of a run manifest.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingInput(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let section = match value.get("config") {
            Some(inner) if value.get("tool_version").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(section).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.cache {
            self.cache = Some(v.clone());
        }
        if let Some(v) = &o.model {
            self.model = Some(v.clone());
        }
        if let Some(v) = o.mode {
            self.mode = Some(v);
        }
        if let Some(v) = o.arch {
            self.arch = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.epochs {
            self.train.epochs = v;
        }
        if let Some(v) = o.batch_size {
            self.train.batch_size = v;
        }
        if let Some(v) = o.lr {
            self.train.learning_rate = Some(v);
        }
        if let Some(v) = o.top_k {
            self.top_k = v;
        }
        if o.recompute_importance {
            self.recompute_importance = true;
        }
        if let Some(v) = o.subsample {
            self.subsample = v;
        }
        // One seed drives every stochastic stage.
        self.forest.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad(format!("subsample {} outside (0, 1]", self.subsample));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction {} outside (0, 1)", self.split_fraction));
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        if self.forest.n_trees == 0 || self.forest.max_depth == 0 || self.forest.min_samples_leaf == 0 {
            return bad("forest n_trees, max_depth and min_samples_leaf must be positive".into());
        }
        self.train.validate().map_err(|e| CliError::Config(e.to_string().replace("invalid configuration: ", "")))
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache.clone().unwrap_or_else(|| self.out.join("dataset.fsds"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.fsnn"))
    }

    pub fn features_path(&self) -> PathBuf {
        self.out.join("features.txt")
    }
}
