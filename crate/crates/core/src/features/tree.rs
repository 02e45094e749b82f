//! CART regression trees grown by variance reduction.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        prediction: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        /// Rows with `value <= threshold` go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
        /// Drop in summed squared error, divided by the root's sample count.
        impurity_decrease: f64,
        n_samples: usize,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f32]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if f64::from(row[*feature]) <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn split_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.split_count() + right.split_count(),
        }
    }

    /// Visits every split as `(feature, impurity_decrease)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            impurity_decrease,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *impurity_decrease);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` means ⌈√d⌉.
    pub features_per_split: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_samples_leaf: 5,
            features_per_split: None,
        }
    }
}

impl TreeConfig {
    pub fn resolve_features(&self, d: usize) -> Result<usize> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("max_depth and min_samples_leaf must be positive".into()));
        }
        let m = self.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);
        if m == 0 || m > d {
            return Err(Error::InvalidConfig(format!("features_per_split {m} must be in 1..={d}")));
        }
        Ok(m)
    }
}

/// Column-major copy of a row-major matrix.
#[derive(Debug, Clone)]
pub struct Columns {
    rows: usize,
    data: Vec<Vec<f32>>,
}

impl Columns {
    pub fn from_row_major(x: &[f32], cols: usize) -> Result<Self> {
        if cols == 0 || !x.len().is_multiple_of(cols) {
            return Err(shape_err("feature matrix", format!("{} values for {cols} columns", x.len())));
        }
        let rows = x.len() / cols;
        let data = (0..cols).map(|j| (0..rows).map(|i| x[i * cols + j]).collect()).collect();
        Ok(Self { rows, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.data.len()
    }

    pub fn column(&self, j: usize) -> &[f32] {
        &self.data[j]
    }
}

/// Best split found at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Summed squared error removed by the split.
    pub sse_decrease: f64,
}

struct Grower<'a> {
    x: &'a Columns,
    y: &'a [f64],
    cfg: TreeConfig,
    m: usize,
    root_n: f64,
    rng: &'a mut Rng,
}

/// Fits one tree on all rows of `x`.
pub fn fit_tree(x: &[f32], cols: usize, y: &[f64], cfg: &TreeConfig, rng: &mut Rng) -> Result<TreeNode> {
    let columns = Columns::from_row_major(x, cols)?;
    let rows: Vec<usize> = (0..columns.rows()).collect();
    fit_tree_on(&columns, y, &rows, cfg, rng)
}

/// Fits one tree on `rows` (duplicates allowed, as in a bootstrap sample).
pub fn fit_tree_on(x: &Columns, y: &[f64], rows: &[usize], cfg: &TreeConfig, rng: &mut Rng) -> Result<TreeNode> {
    if rows.is_empty() || x.rows() == 0 {
        return Err(Error::EmptyInput("no rows to fit"));
    }
    if y.len() != x.rows() {
        return Err(shape_err("fit_tree", format!("{} targets for {} rows", y.len(), x.rows())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression target"));
    }
    let m = cfg.resolve_features(x.cols())?;
    let mut g = Grower {
        x,
        y,
        cfg: *cfg,
        m,
        root_n: rows.len() as f64,
        rng,
    };
    let mut rows = rows.to_vec();
    Ok(g.grow(&mut rows, 0))
}

fn sum_and_sse(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let sum: f64 = rows.iter().map(|&i| y[i]).sum();
    let mean = sum / n;
    let sse = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (sum, sse)
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> TreeNode {
        let n = rows.len();
        let (sum, sse) = sum_and_sse(self.y, rows);
        let leaf = TreeNode::Leaf {
            prediction: sum / n as f64,
            n_samples: n,
        };
        if depth >= self.cfg.max_depth || n < 2 * self.cfg.min_samples_leaf || sse <= 0.0 {
            return leaf;
        }
        let features = self.candidate_features(rows);
        let Some(best) = best_split(self.x, self.y, rows, &features, self.cfg.min_samples_leaf) else {
            return leaf;
        };
        if best.sse_decrease <= sse * 1e-12 {
            return leaf;
        }
        let col = self.x.column(best.feature);
        let mut split_at = 0;
        for k in 0..n {
            if f64::from(col[rows[k]]) <= best.threshold {
                rows.swap(k, split_at);
                split_at += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split_at);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
            impurity_decrease: best.sse_decrease.max(0.0) / self.root_n,
            n_samples: n,
        }
    }

    /// Up to `m` features that vary within the node, drawn in random order and
    /// returned ascending.
    fn candidate_features(&mut self, rows: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.x.cols()).collect();
        self.rng.shuffle(&mut order);
        let mut picked = Vec::with_capacity(self.m);
        for f in order {
            if picked.len() == self.m {
                break;
            }
            let col = self.x.column(f);
            let first = col[rows[0]];
            if rows.iter().any(|&i| col[i] != first) {
                picked.push(f);
            }
        }
        picked.sort_unstable();
        picked
    }
}

/// Exhaustive threshold scan over `features`. Ties keep the earliest feature
/// and the lowest threshold.
pub fn best_split(x: &Columns, y: &[f64], rows: &[usize], features: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&i| y[i]).sum();
    let base = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut pairs: Vec<(f32, f64)> = Vec::with_capacity(n);
    for &f in features {
        let col = x.column(f);
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (col[i], y[i])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += pairs[k].1;
            let nl = k + 1;
            let (a, b) = (pairs[k].0, pairs[k + 1].0);
            if a == b || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / nl as f64 + right_sum * right_sum / (n - nl) as f64;
            if best.is_none_or(|(s, _, _)| score > s) {
                let threshold = (f64::from(a) + f64::from(b)) / 2.0;
                best = Some((score, f, threshold));
            }
        }
    }
    best.map(|(score, feature, threshold)| SplitChoice {
        feature,
        threshold,
        sse_decrease: score - base,
    })
}
