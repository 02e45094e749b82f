//! Per-class subsampling and stratified train/test splitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    /// Ascending row indices.
    pub train: Vec<usize>,
    /// Ascending row indices.
    pub test: Vec<usize>,
    pub seed: u64,
    pub fraction: f64,
}

/// `round(fraction * n)` with halves going up. The small slack absorbs
/// binary representation error in `fraction` (0.8 * 5 must round to 4).
pub fn round_half_up(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    ((x + 0.5 + 1e-9).floor() as usize).min(n)
}

fn rows_by_class(labels: &[u16]) -> Vec<Vec<usize>> {
    let classes = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c as usize].push(i);
    }
    by_class
}

/// Keeps about `fraction` of each class's rows, sampled without replacement.
/// Non-empty classes keep at least one row. Returns ascending row indices.
pub fn subsample(labels: &[u16], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("subsample fraction {fraction} outside (0, 1]")));
    }
    if fraction == 1.0 {
        return Ok((0..labels.len()).collect());
    }
    let mut rng = Rng::new(seed);
    let mut keep = Vec::new();
    for rows in rows_by_class(labels).into_iter().filter(|r| !r.is_empty()) {
        let k = round_half_up(fraction, rows.len()).max(1);
        keep.extend(rng.sample_indices(rows.len(), k).into_iter().map(|i| rows[i]));
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Shuffles each class with a seeded stream and sends
/// `round_half_up(fraction * n_c)` of its rows to train, the rest to test.
/// Classes with no rows are skipped; a class with a single row cannot be
/// split. `class_name` is used only for error messages.
pub fn stratified_split_named(
    labels: &[u16],
    fraction: f64,
    seed: u64,
    class_name: impl Fn(usize) -> String,
) -> Result<SplitIndices> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut rng = Rng::new(seed);
    let mut train = Vec::with_capacity(round_half_up(fraction, labels.len()));
    let mut test = Vec::new();
    for (class, mut rows) in rows_by_class(labels).into_iter().enumerate() {
        match rows.len() {
            0 => continue,
            1 => {
                return Err(Error::ClassTooSmall {
                    class: class_name(class),
                    rows: 1,
                })
            }
            n => {
                rng.shuffle(&mut rows);
                let cut = round_half_up(fraction, n);
                train.extend_from_slice(&rows[..cut]);
                test.extend_from_slice(&rows[cut..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        test,
        seed,
        fraction,
    })
}

pub fn stratified_split(labels: &[u16], fraction: f64, seed: u64) -> Result<SplitIndices> {
    stratified_split_named(labels, fraction, seed, |c| format!("#{c}"))
}
