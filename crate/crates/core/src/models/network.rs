//! Built detectors: construction, inference and the per-sample training step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{Architecture, ModelSpec, OutputActivation};
use crate::dataset::Normalizer;
use crate::error::{shape_err, Error, Result};
use crate::nn::activation::{sigmoid_scalar, softmax_in_place};
use crate::nn::loss::{binary_cross_entropy_logit_grad, sparse_categorical_cross_entropy};
use crate::nn::{AnyLayer, Conv1d, Dense, Dropout, Flatten, Layer, Lstm, MaxPool1d, Relu, Sequential};
use crate::rng::Rng;
use crate::tensor::{Parameter, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub fraction: f64,
    pub seed: u64,
}

/// What a trained model needs to be applied to new data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelMeta {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub normalizer: Option<Normalizer>,
    pub split: Option<SplitInfo>,
}

#[derive(Debug, Clone)]
pub struct Model<F: Scalar = f32> {
    pub spec: ModelSpec,
    pub meta: ModelMeta,
    pub init_seed: u64,
    /// Layers up to and including the output dense layer; the head activation
    /// is applied separately.
    pub net: Sequential<F>,
}

fn glorot<F: Scalar>(p: &mut Parameter<F>, fan_in: usize, fan_out: usize, rng: &mut Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in p.value.data_mut() {
        *v = F::from_f64(rng.uniform(-limit, limit));
    }
}

fn layers<F: Scalar>(spec: &ModelSpec) -> Result<Vec<AnyLayer<F>>> {
    let out = spec.output_units;
    Ok(match spec.architecture {
        Architecture::Cnn => {
            let [f1, f2] = spec.conv_filters;
            let k = spec.kernel_size;
            vec![
                AnyLayer::Conv1d(Conv1d::zeros("conv1", 1, f1, k)),
                AnyLayer::Relu(Relu::default()),
                AnyLayer::MaxPool1d(MaxPool1d::new(spec.pool_size)),
                AnyLayer::Conv1d(Conv1d::zeros("conv2", f1, f2, k)),
                AnyLayer::Relu(Relu::default()),
                AnyLayer::MaxPool1d(MaxPool1d::new(spec.pool_size)),
                AnyLayer::Flatten(Flatten::default()),
                AnyLayer::Dense(Dense::zeros("output", spec.cnn_flat_width()?, out)),
            ]
        }
        Architecture::Lstm => {
            let [h1, h2] = spec.lstm_units;
            vec![
                AnyLayer::Lstm(Lstm::zeros("lstm1", 1, h1, true)),
                AnyLayer::Dropout(Dropout::new(spec.dropout_rate)?),
                AnyLayer::Lstm(Lstm::zeros("lstm2", h1, h2, false)),
                AnyLayer::Dropout(Dropout::new(spec.dropout_rate)?),
                AnyLayer::Dense(Dense::zeros("output", h2, out)),
            ]
        }
    })
}

/// Glorot-uniform weights, zero biases, LSTM forget-gate biases at one.
fn initialize<F: Scalar>(net: &mut Sequential<F>, seed: u64) {
    let mut rng = Rng::new(seed);
    for layer in &mut net.layers {
        match layer {
            AnyLayer::Conv1d(c) => {
                let (c_out, c_in, k) = (c.weight.shape()[0], c.weight.shape()[1], c.weight.shape()[2]);
                glorot(&mut c.weight, c_in * k, c_out * k, &mut rng);
            }
            AnyLayer::Dense(d) => {
                let (n_in, n_out) = (d.inputs(), d.outputs());
                glorot(&mut d.weight, n_in, n_out, &mut rng);
            }
            AnyLayer::Lstm(l) => {
                let (d, h) = (l.input_dim(), l.hidden());
                glorot(&mut l.w_x, d, 4 * h, &mut rng);
                glorot(&mut l.w_h, h, 4 * h, &mut rng);
                l.bias.value.data_mut()[h..2 * h].iter_mut().for_each(|b| *b = F::ONE);
            }
            _ => {}
        }
    }
}

/// Builds and initializes a model; identical seeds give bit-identical parameters.
pub fn build<F: Scalar>(spec: &ModelSpec, seed: u64) -> Result<Model<F>> {
    spec.validate()?;
    let mut net = Sequential::new(layers(spec)?);
    initialize(&mut net, seed);
    let model = Model {
        spec: spec.clone(),
        meta: ModelMeta::default(),
        init_seed: seed,
        net,
    };
    if model.spec.architecture == Architecture::Cnn {
        let lens = spec.cnn_lengths()?;
        let shapes = model.layer_output_shapes()?;
        let [f1, f2] = spec.conv_filters;
        let expected = [
            vec![f1, lens[1]],
            vec![f1, lens[1]],
            vec![f1, lens[2]],
            vec![f2, lens[3]],
            vec![f2, lens[3]],
            vec![f2, lens[4]],
            vec![f2 * lens[4]],
            vec![spec.output_units],
        ];
        if shapes != expected {
            return Err(Error::InvalidSpec(format!("layer shapes {shapes:?}, expected {expected:?}")));
        }
    }
    let counted = model.parameter_count();
    if counted != spec.parameter_count()? {
        return Err(Error::InvalidSpec(format!(
            "built {counted} parameters, spec implies {}",
            spec.parameter_count()?
        )));
    }
    Ok(model)
}

/// Binary: probability ≥ 0.5 is class 1. Otherwise argmax with ties to the
/// lowest index.
pub fn predict_from_probs<F: Scalar>(probs: &[F]) -> usize {
    if probs.len() == 1 {
        return usize::from(probs[0] >= F::from_f64(0.5));
    }
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Predicted class and its confidence: the sigmoid output for binary heads,
/// the largest probability otherwise.
pub fn predict_with_confidence<F: Scalar>(probs: &[F]) -> (usize, F) {
    let class = predict_from_probs(probs);
    let conf = if probs.len() == 1 { probs[0] } else { probs[class] };
    (class, conf)
}

/// Outcome of one sample's forward and backward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStep<F> {
    pub loss: F,
    pub predicted: usize,
}

impl<F: Scalar> Model<F> {
    pub fn parameter_count(&self) -> usize {
        self.net.parameter_count()
    }

    pub fn params(&self) -> Vec<&Parameter<F>> {
        self.net.params()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        self.net.params_mut()
    }

    pub fn zero_grad(&mut self) {
        self.net.zero_grad();
    }

    pub fn cast<G: Scalar>(&self) -> Result<Model<G>> {
        let mut out: Model<G> = build(&self.spec, self.init_seed)?;
        out.meta = self.meta.clone();
        for (dst, src) in out.net.params_mut().into_iter().zip(self.net.params()) {
            *dst = src.cast();
        }
        Ok(out)
    }

    /// A CNN sees one channel of `n` samples; an LSTM sees `n` steps of one value.
    pub fn frame(&self, features: &[F]) -> Result<Tensor<F>> {
        let n = self.spec.input_features;
        if features.len() != n {
            return Err(shape_err("model input", format!("{} features, model expects {n}", features.len())));
        }
        let shape = match self.spec.architecture {
            Architecture::Cnn => [1, n],
            Architecture::Lstm => [n, 1],
        };
        Tensor::new(&shape, features.to_vec())
    }

    fn activate(&self, mut logits: Vec<F>) -> Vec<F> {
        match self.spec.output_activation {
            OutputActivation::Sigmoid => logits.iter_mut().for_each(|z| *z = sigmoid_scalar(*z)),
            OutputActivation::Softmax => softmax_in_place(&mut logits),
        }
        logits
    }

    /// Inference on one row of features; dropout is inert.
    pub fn probabilities(&self, features: &[F]) -> Result<Vec<F>> {
        let logits = self.net.infer(&self.frame(features)?)?;
        Ok(self.activate(logits.into_data()))
    }

    /// `[B, features]` in, `[B, output_units]` probabilities out. Rows are
    /// evaluated in parallel.
    pub fn forward(&self, batch: &Tensor<F>) -> Result<Tensor<F>> {
        let &[b, n] = batch.shape() else {
            return Err(shape_err("model forward", format!("expected [B, features], got {:?}", batch.shape())));
        };
        if n != self.spec.input_features {
            return Err(shape_err("model forward", format!("{n} features, model expects {}", self.spec.input_features)));
        }
        let out = self.probabilities_rows(batch.data())?;
        Tensor::new(&[b, self.spec.output_units], out)
    }

    /// Probabilities for a row-major matrix, concatenated.
    pub fn probabilities_rows(&self, rows: &[F]) -> Result<Vec<F>> {
        let n = self.spec.input_features;
        if !rows.len().is_multiple_of(n) {
            return Err(shape_err("model forward", format!("{} values for rows of {n}", rows.len())));
        }
        let per_row: Vec<Vec<F>> = rows
            .par_chunks(n)
            .map(|r| self.probabilities(r))
            .collect::<Result<_>>()?;
        Ok(per_row.concat())
    }

    pub fn predict(&self, batch: &Tensor<F>) -> Result<Vec<usize>> {
        let probs = self.forward(batch)?;
        Ok(probs.data().chunks(self.spec.output_units).map(predict_from_probs).collect())
    }

    /// Forward with caches, loss, and backward for one sample. Gradients are
    /// accumulated scaled by `1 / batch_size` so that summing over a batch
    /// gives the batch-mean gradient. Passing an `Rng` enables dropout.
    pub fn train_sample(&mut self, features: &[F], label: usize, batch_size: usize, rng: Option<&mut Rng>) -> Result<SampleStep<F>> {
        let input = self.frame(features)?;
        let logits = self.net.forward(&input, rng)?;
        let probs = self.activate(logits.into_data());
        let scale = F::from_f64(1.0 / batch_size as f64);
        let out = match self.spec.output_activation {
            OutputActivation::Sigmoid => {
                let y = match label {
                    0 => F::ZERO,
                    1 => F::ONE,
                    other => return Err(Error::InvalidLabel(other as f64)),
                };
                binary_cross_entropy_logit_grad(&Tensor::vector(probs.clone()), &[y])?
            }
            OutputActivation::Softmax => {
                sparse_categorical_cross_entropy(&Tensor::vector(probs.clone()), &[label])?
            }
        };
        let grad = out.grad.map(|g| g * scale);
        self.net.backward(&grad)?;
        Ok(SampleStep {
            loss: out.loss,
            predicted: predict_from_probs(&probs),
        })
    }

    /// Mean loss over samples without touching gradients or caches.
    pub fn loss(&self, rows: &[F], labels: &[usize]) -> Result<f64> {
        let probs = self.probabilities_rows(rows)?;
        let units = self.spec.output_units;
        if probs.len() != labels.len() * units {
            return Err(shape_err("model loss", format!("{} labels for {} rows", labels.len(), probs.len() / units)));
        }
        let mut total = 0.0;
        for (p, &y) in probs.chunks(units).zip(labels) {
            total += match self.spec.output_activation {
                OutputActivation::Sigmoid => {
                    let y = F::from_f64(y as f64);
                    crate::nn::binary_cross_entropy(&Tensor::vector(p.to_vec()), &[y])?.loss.to_f64()
                }
                OutputActivation::Softmax => {
                    sparse_categorical_cross_entropy(&Tensor::vector(p.to_vec()), &[y])?.loss.to_f64()
                }
            };
        }
        Ok(total / labels.len().max(1) as f64)
    }

    /// Output shape of every layer for a zero input row.
    pub fn layer_output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut x = self.frame(&vec![F::ZERO; self.spec.input_features])?;
        let mut shapes = Vec::with_capacity(self.net.layers.len());
        for layer in &self.net.layers {
            x = layer.infer(&x)?;
            shapes.push(x.shape().to_vec());
        }
        Ok(shapes)
    }
}
