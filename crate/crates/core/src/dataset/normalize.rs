//! Per-feature scaling fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormScheme {
    /// Scale to [0, 1] with training min/max; other data is clipped.
    #[default]
    MinMax,
    /// Subtract mean, divide by standard deviation.
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub scheme: NormScheme,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fits statistics over a row-major `rows x cols` matrix.
pub fn fit_normalizer(data: &[f32], cols: usize, scheme: NormScheme) -> Result<Normalizer> {
    if cols == 0 || data.is_empty() {
        return Err(Error::EmptyInput("normalizer needs at least one training row"));
    }
    let rows = data.len() / cols;
    let mut min = vec![f64::INFINITY; cols];
    let mut max = vec![f64::NEG_INFINITY; cols];
    let mut sum = vec![0.0f64; cols];
    for row in data.chunks_exact(cols) {
        for (j, &v) in row.iter().enumerate() {
            let v = v as f64;
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
            sum[j] += v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / rows as f64).collect();
    let mut var = vec![0.0f64; cols];
    for row in data.chunks_exact(cols) {
        for (j, &v) in row.iter().enumerate() {
            let d = v as f64 - mean[j];
            var[j] += d * d;
        }
    }
    let std = var.iter().map(|v| (v / rows as f64).sqrt()).collect();
    Ok(Normalizer {
        scheme,
        min,
        max,
        mean,
        std,
    })
}

impl Normalizer {
    pub fn cols(&self) -> usize {
        self.min.len()
    }

    pub fn apply_value(&self, j: usize, v: f32) -> f32 {
        let v = v as f64;
        let out = match self.scheme {
            NormScheme::MinMax => {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    ((v - self.min[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
            NormScheme::ZScore => {
                if self.std[j] > 0.0 {
                    (v - self.mean[j]) / self.std[j]
                } else {
                    0.0
                }
            }
        };
        out as f32
    }

    /// Transforms a row-major matrix in place.
    pub fn apply(&self, data: &mut [f32]) {
        let cols = self.cols();
        for row in data.chunks_exact_mut(cols) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.apply_value(j, *v);
            }
        }
    }
}

pub fn apply_normalizer(data: &[f32], stats: &Normalizer) -> Vec<f32> {
    let mut out = data.to_vec();
    stats.apply(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn min_max_midpoint() {
        let n = fit_normalizer(&[0.0, 10.0], 1, NormScheme::MinMax).unwrap();
        assert_eq!(n.apply_value(0, 5.0), 0.5);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let n = fit_normalizer(&[3.0, 3.0, 3.0], 1, NormScheme::MinMax).unwrap();
        assert_eq!(apply_normalizer(&[3.0, 4.0, -1.0], &n), vec![0.0, 0.0, 0.0]);
        let z = fit_normalizer(&[3.0, 3.0], 1, NormScheme::ZScore).unwrap();
        assert_eq!(z.apply_value(0, 7.0), 0.0);
    }

    #[test]
    fn z_score() {
        let n = fit_normalizer(&[1.0, 3.0], 1, NormScheme::ZScore).unwrap();
        assert_eq!((n.mean[0], n.std[0]), (2.0, 1.0));
        assert_eq!(n.apply_value(0, 4.0), 2.0);
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(fit_normalizer(&[], 3, NormScheme::MinMax), Err(Error::EmptyInput(_))));
    }

    proptest! {
        #[test]
        fn test_values_stay_in_unit_interval(
            train in proptest::collection::vec(-1e6f32..1e6, 3..60),
            test in proptest::collection::vec(-1e7f32..1e7, 3..60),
        ) {
            let cols = 3;
            let train = &train[..train.len() / cols * cols];
            let test = &test[..test.len() / cols * cols];
            let n = fit_normalizer(train, cols, NormScheme::MinMax).unwrap();
            for v in apply_normalizer(test, &n) {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
