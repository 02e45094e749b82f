//! Feature ranking with a random-forest regressor.

pub mod forest;
pub mod importance;
pub mod tree;

pub use forest::{fit_forest, Forest, ForestConfig};
pub use importance::{compute_importances, select_top_k, ImportanceReport};
pub use tree::{best_split, fit_tree, fit_tree_on, Columns, SplitChoice, TreeConfig, TreeNode};

use crate::dataset::{FlowDataset, LabelFamilies};
use crate::error::{Error, Result};

/// Ranks the dataset's features by regressing the multi-class label index.
/// Rows whose raw label has no multi-class index are left out.
pub fn rank_features(ds: &FlowDataset, families: &LabelFamilies, cfg: &ForestConfig) -> Result<ImportanceReport> {
    let targets = ds.multi_class_targets(families);
    let keep: Vec<usize> = (0..ds.rows()).filter(|&i| targets[i].is_some()).collect();
    if keep.is_empty() {
        return Err(Error::EmptyInput("no rows with a multi-class label"));
    }
    let mut x = Vec::with_capacity(keep.len() * ds.cols());
    for &i in &keep {
        x.extend_from_slice(ds.row(i));
    }
    let y: Vec<f64> = keep.iter().map(|&i| f64::from(targets[i].expect("filtered"))).collect();
    let forest = fit_forest(&x, ds.cols(), &y, cfg)?;
    compute_importances(&forest, &ds.feature_names)
}
