//! Impurity-based feature importances and top-k selection.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::forest::Forest;
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Descending importance; equal importances ordered by name.
    pub entries: Vec<(String, f64)>,
    /// Set when no tree split at all, leaving every importance zero.
    pub degenerate: bool,
}

impl ImportanceReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,importance\n");
        for (name, v) in &self.entries {
            out.push_str(&format!("{},{v}\n", csv_field(name)));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-tree sums of each feature's impurity decrease, averaged over trees and
/// scaled to sum to one.
pub fn compute_importances(forest: &Forest, feature_names: &[String]) -> Result<ImportanceReport> {
    if forest.trees.is_empty() {
        return Err(Error::EmptyInput("forest has no trees"));
    }
    if feature_names.len() != forest.n_features {
        return Err(shape_err(
            "importances",
            format!("{} names for {} features", feature_names.len(), forest.n_features),
        ));
    }
    let mut acc = vec![0.0f64; forest.n_features];
    for tree in &forest.trees {
        let mut per_tree = vec![0.0f64; forest.n_features];
        tree.for_each_split(&mut |f, d| per_tree[f] += d);
        for (a, p) in acc.iter_mut().zip(per_tree) {
            *a += p;
        }
    }
    let trees = forest.trees.len() as f64;
    acc.iter_mut().for_each(|a| *a /= trees);
    let total: f64 = acc.iter().sum();
    let degenerate = !(total > 0.0);
    if !degenerate {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    Ok(ImportanceReport {
        entries: sort_entries(feature_names.iter().cloned().zip(acc).collect()),
        degenerate,
    })
}

fn sort_entries(mut entries: Vec<(String, f64)>) -> Vec<(String, f64)> {
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries
}

/// First `k` names of the report's ordering.
pub fn select_top_k(report: &ImportanceReport, k: usize) -> Result<Vec<String>> {
    if k > report.entries.len() {
        return Err(Error::KTooLarge {
            k,
            available: report.entries.len(),
        });
    }
    Ok(sort_entries(report.entries.clone()).into_iter().take(k).map(|(n, _)| n).collect())
}
