//! Split, scale, train and score: the full experiment on a cached dataset.

use serde::{Deserialize, Serialize};

use super::{evaluate_dataset, train_with, EpochRecord, MetricsReport, TrainConfig, TrainHistory};
use crate::dataset::{fit_normalizer, FlowDataset, NormScheme, Normalizer, SplitIndices};
use crate::error::{Error, Result};
use crate::models::{build, Architecture, Model, ModelMeta, ModelSpec, SplitInfo};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSetup {
    pub architecture: Architecture,
    /// Columns fed to the model, in order.
    pub features: Vec<String>,
    /// Share of each class that goes to training.
    pub split_fraction: f64,
    pub split_seed: u64,
    pub normalization: NormScheme,
    pub train: TrainConfig,
}

impl Default for ExperimentSetup {
    fn default() -> Self {
        Self {
            architecture: Architecture::Cnn,
            features: crate::dataset::schema::canonical_top20(),
            split_fraction: 0.8,
            split_seed: 42,
            normalization: NormScheme::MinMax,
            train: TrainConfig::default(),
        }
    }
}

/// Train and test parts, scaled with statistics of the train part.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: FlowDataset,
    pub test: FlowDataset,
    pub normalizer: Normalizer,
    pub split: SplitIndices,
}

pub fn prepare_training_data(
    ds: &FlowDataset,
    features: &[String],
    split_fraction: f64,
    split_seed: u64,
    scheme: NormScheme,
) -> Result<PreparedData> {
    let selected = ds.select_features(features)?;
    let split = selected.split(split_fraction, split_seed)?;
    let mut train = selected.subset(&split.train);
    let mut test = selected.subset(&split.test);
    let normalizer = fit_normalizer(train.features(), train.cols(), scheme)?;
    train.normalize(&normalizer)?;
    test.normalize(&normalizer)?;
    Ok(PreparedData {
        train,
        test,
        normalizer,
        split,
    })
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: Model,
    pub history: TrainHistory,
    pub metrics: MetricsReport,
    pub split: SplitIndices,
}

pub fn run_experiment(ds: &FlowDataset, setup: &ExperimentSetup) -> Result<Experiment> {
    run_experiment_with(ds, setup, |_| {})
}

/// Model initialization draws from the training seed's stream 0.
pub fn run_experiment_with(
    ds: &FlowDataset,
    setup: &ExperimentSetup,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<Experiment> {
    setup.train.validate()?;
    let prep = prepare_training_data(ds, &setup.features, setup.split_fraction, setup.split_seed, setup.normalization)?;
    let spec = ModelSpec::new(setup.architecture, ds.mode).with_input_features(setup.features.len());
    let mut model: Model = build(&spec, derive_seed(setup.train.seed, 0))?;
    model.meta = ModelMeta {
        feature_names: setup.features.clone(),
        class_names: ds.classes.clone(),
        normalizer: Some(prep.normalizer.clone()),
        split: Some(SplitInfo {
            fraction: setup.split_fraction,
            seed: setup.split_seed,
        }),
    };
    let (model, history) = train_with(model, &prep.train, &setup.train, on_epoch)?;
    let metrics = evaluate_dataset(&model, &prep.test)?;
    Ok(Experiment {
        model,
        history,
        metrics,
        split: prep.split,
    })
}

/// Rebuilds the held-out part of `ds` the model was scored on: same
/// features, same split, same scaling.
pub fn prepare_evaluation(model: &Model, ds: &FlowDataset) -> Result<FlowDataset> {
    if model.spec.mode != ds.mode {
        return Err(Error::ModeMismatch {
            model: model.spec.mode.to_string(),
            data: ds.mode.to_string(),
        });
    }
    let split = model
        .meta
        .split
        .as_ref()
        .ok_or_else(|| Error::CorruptModel("model records no train/test split".into()))?;
    let selected = ds.select_features(&model.meta.feature_names)?;
    let indices = selected.split(split.fraction, split.seed)?;
    let mut test = selected.subset(&indices.test);
    scale_for_model(model, &mut test)?;
    Ok(test)
}

/// Applies the model's stored scaling, if any, to rows already restricted to
/// the model's features.
pub fn scale_for_model(model: &Model, ds: &mut FlowDataset) -> Result<()> {
    match &model.meta.normalizer {
        Some(n) => ds.normalize(n),
        None => Ok(()),
    }
}
