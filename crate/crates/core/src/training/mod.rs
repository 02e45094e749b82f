//! Mini-batch training with Adam, per-epoch history, and evaluation.

pub mod history;
pub mod metrics;
pub mod pipeline;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use history::{export_history, EpochRecord, TrainHistory, HISTORY_HEADER};
pub use metrics::{classification_report, confusion_matrix, metrics_from_confusion, Averages, ClassMetrics, MetricsReport};
pub use pipeline::{
    prepare_evaluation, prepare_training_data, run_experiment, run_experiment_with, scale_for_model, Experiment, ExperimentSetup,
    PreparedData,
};

use crate::dataset::{stratified_split, FlowDataset};
use crate::error::{shape_err, Error, Result};
use crate::models::{predict_from_probs, Model};
use crate::nn::{Adam, AdamConfig};
use crate::rng::{derive_seed, Rng};
use crate::tensor::Tensor;

/// Samples per gradient chunk. Chunks run in parallel and their gradients are
/// summed in a fixed order, so results do not depend on the thread count.
pub const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// `None` uses the architecture's default.
    pub learning_rate: Option<f64>,
    pub seed: u64,
    pub validation_fraction: f64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 256,
            learning_rate: None,
            seed: 42,
            validation_fraction: 0.1,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::InvalidConfig(format!("learning_rate {lr} must be positive")));
            }
        }
        Ok(())
    }
}

/// Stratified split of `labels` into (train, validation) positions. Classes
/// with a single row stay entirely in the training part.
pub fn validation_split(labels: &[u16], validation_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut counts = std::collections::HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let (splittable, singles): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| counts[&labels[i]] > 1);
    let sub: Vec<u16> = splittable.iter().map(|&i| labels[i]).collect();
    let mut train = singles;
    let mut val = Vec::new();
    if !sub.is_empty() {
        let s = stratified_split(&sub, 1.0 - validation_fraction, seed)?;
        train.extend(s.train.iter().map(|&k| splittable[k]));
        val.extend(s.test.iter().map(|&k| splittable[k]));
    }
    train.sort_unstable();
    Ok((train, val))
}

fn check_compatible(model: &Model, ds: &FlowDataset) -> Result<()> {
    if model.spec.mode != ds.mode {
        return Err(Error::ModeMismatch {
            model: model.spec.mode.to_string(),
            data: ds.mode.to_string(),
        });
    }
    if ds.cols() != model.spec.input_features {
        return Err(shape_err(
            "train",
            format!("dataset has {} features, model expects {}", ds.cols(), model.spec.input_features),
        ));
    }
    Ok(())
}

/// Mean loss and accuracy of `rows` in inference mode; NaN for no rows.
fn score(model: &Model, ds: &FlowDataset, rows: &[usize]) -> Result<(f64, f64)> {
    if rows.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let sub = ds.subset(rows);
    let labels: Vec<usize> = sub.labels().iter().map(|&l| l as usize).collect();
    let probs = model.probabilities_rows(sub.features())?;
    let correct = probs
        .chunks(model.spec.output_units)
        .zip(&labels)
        .filter(|(p, &y)| predict_from_probs(p) == y)
        .count();
    Ok((model.loss(sub.features(), &labels)?, correct as f64 / labels.len() as f64))
}

pub fn train(model: Model, ds: &FlowDataset, cfg: &TrainConfig) -> Result<(Model, TrainHistory)> {
    train_with(model, ds, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    mut model: Model,
    ds: &FlowDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    check_compatible(&model, ds)?;
    if ds.is_empty() {
        return Err(Error::EmptyInput("no training rows"));
    }
    let lr = cfg.learning_rate.unwrap_or(model.spec.architecture.default_learning_rate());
    let mut adam = Adam::new(AdamConfig::with_learning_rate(lr));
    let (train_rows, val_rows) = validation_split(ds.labels(), cfg.validation_fraction, derive_seed(cfg.seed, 1))?;
    let mut order_rng = Rng::derive(cfg.seed, 2);
    let dropout_seed = derive_seed(cfg.seed, 3);
    let mut samples_seen: u64 = 0;

    let chunks_per_batch = cfg.batch_size.min(train_rows.len()).div_ceil(GRAD_CHUNK);
    let mut replicas: Vec<Model> = vec![model.clone(); chunks_per_batch];
    let mut history = TrainHistory::default();
    let mut order = train_rows.clone();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        if cfg.shuffle {
            order_rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let chunks: Vec<&[usize]> = batch.chunks(GRAD_CHUNK).collect();
            let base = samples_seen;
            let master = &model;
            let outcomes = replicas[..chunks.len()]
                .par_iter_mut()
                .zip(chunks.par_iter())
                .enumerate()
                .map(|(ci, (replica, rows))| -> Result<(f64, usize)> {
                    for (dst, src) in replica.params_mut().into_iter().zip(master.params()) {
                        dst.value.data_mut().copy_from_slice(src.value.data());
                        dst.zero_grad();
                    }
                    let mut loss = 0.0;
                    let mut hits = 0;
                    for (k, &row) in rows.iter().enumerate() {
                        let id = base + (ci * GRAD_CHUNK + k) as u64;
                        let mut rng = Rng::derive(dropout_seed, id);
                        let step = replica.train_sample(ds.row(row), ds.labels()[row] as usize, batch.len(), Some(&mut rng))?;
                        loss += f64::from(step.loss);
                        hits += usize::from(step.predicted == ds.labels()[row] as usize);
                    }
                    Ok((loss, hits))
                })
                .collect::<Result<Vec<_>>>()?;
            samples_seen += batch.len() as u64;

            let batch_loss: f64 = outcomes.iter().map(|o| o.0).sum();
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    last_good: history.last().map(|r| r.epoch),
                });
            }
            loss_sum += batch_loss;
            correct += outcomes.iter().map(|o| o.1).sum::<usize>();

            let mut params = model.params_mut();
            for p in params.iter_mut() {
                p.zero_grad();
            }
            for replica in &replicas[..chunks.len()] {
                for (dst, src) in params.iter_mut().zip(replica.params()) {
                    dst.grad.add_assign(&src.grad)?;
                }
            }
            adam.step(params).map_err(|e| match e {
                Error::NonFiniteGradient(_) => Error::NonFiniteLoss {
                    epoch,
                    last_good: history.last().map(|r| r.epoch),
                },
                other => other,
            })?;
        }
        let (val_loss, val_accuracy) = score(&model, ds, &val_rows)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            val_loss,
            val_accuracy,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.epochs.push(record);
    }
    Ok((model, history))
}

/// Predicted class for every row of `ds`.
pub fn predict_dataset(model: &Model, ds: &FlowDataset) -> Result<Vec<usize>> {
    check_compatible(model, ds)?;
    let probs = model.probabilities_rows(ds.features())?;
    Ok(probs.chunks(model.spec.output_units).map(predict_from_probs).collect())
}

/// Metrics of `model` over a feature matrix and its labels.
pub fn evaluate(model: &Model, rows: &Tensor, labels: &[usize], class_names: &[String]) -> Result<MetricsReport> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("empty test set"));
    }
    let pred = model.predict(rows)?;
    classification_report(labels, &pred, class_names)
}

/// Metrics over every row of a dataset whose regime must match the model's.
pub fn evaluate_dataset(model: &Model, ds: &FlowDataset) -> Result<MetricsReport> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("empty test set"));
    }
    let pred = predict_dataset(model, ds)?;
    let truth: Vec<usize> = ds.labels().iter().map(|&l| l as usize).collect();
    classification_report(&truth, &pred, &ds.classes)
}
