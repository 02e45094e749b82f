//! Bagged regression forests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, Columns, TreeConfig, TreeNode};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` means ⌈√d⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    /// Bootstrap sample size per tree, capped at the row count; `None` means
    /// the row count.
    pub max_samples: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 5,
            features_per_split: None,
            bootstrap: true,
            max_samples: None,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn tree(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
}

impl Forest {
    /// Mean of the trees' predictions.
    pub fn predict(&self, row: &[f32]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Tree `i` draws from stream `i` of the seed, so the result does not depend
/// on how trees are scheduled across threads.
pub fn fit_forest(x: &[f32], cols: usize, y: &[f64], cfg: &ForestConfig) -> Result<Forest> {
    if cfg.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be positive".into()));
    }
    if cfg.max_samples == Some(0) {
        return Err(Error::InvalidConfig("max_samples must be positive".into()));
    }
    let columns = Columns::from_row_major(x, cols)?;
    let n = columns.rows();
    if n == 0 {
        return Err(Error::EmptyInput("no rows to fit"));
    }
    let tree_cfg = cfg.tree();
    tree_cfg.resolve_features(cols)?;
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::derive(cfg.seed, i as u64);
            let rows: Vec<usize> = if cfg.bootstrap {
                let draws = cfg.max_samples.map_or(n, |m| m.min(n));
                (0..draws).map(|_| rng.below(n as u64) as usize).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_on(&columns, y, &rows, &tree_cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest { trees, n_features: cols })
}
