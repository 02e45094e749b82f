//! Central finite-difference gradient checking in 64-bit precision.
//!
//! A [`GradCheck`] target exposes a scalar loss and its parameters. The
//! checker records the analytic gradient from one `loss_and_grad` call, then
//! perturbs every element by `±h` and compares against
//! `(L(w + h) - L(w - h)) / 2h` with the relative error
//! `|a - n| / max(|a|, |n|, 1e-12)`.

use super::loss::{binary_cross_entropy, sparse_categorical_cross_entropy};
use super::{softmax, Layer};
use crate::error::Result;
use crate::rng::Rng;
use crate::tensor::{Parameter, Tensor};

pub const DEFAULT_STEP: f64 = 1e-5;

pub trait GradCheck {
    fn num_params(&self) -> usize;

    fn param_mut(&mut self, index: usize) -> &mut Parameter<f64>;

    /// Forward pass only.
    fn loss(&mut self) -> Result<f64>;

    /// Forward and backward; parameter gradients are reset first.
    fn loss_and_grad(&mut self) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamError {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamError>,
    pub max_rel_err: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

pub fn gradient_check<M: GradCheck + ?Sized>(target: &mut M, step: f64) -> Result<GradCheckReport> {
    for i in 0..target.num_params() {
        target.param_mut(i).zero_grad();
    }
    target.loss_and_grad()?;
    let analytic: Vec<Vec<f64>> = (0..target.num_params())
        .map(|i| target.param_mut(i).grad.data().to_vec())
        .collect();

    let mut report = GradCheckReport {
        params: Vec::new(),
        max_rel_err: 0.0,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        let mut entry = ParamError {
            name: target.param_mut(pi).name.clone(),
            max_rel_err: 0.0,
            worst_index: 0,
        };
        for (ei, &a) in grads.iter().enumerate() {
            let orig = target.param_mut(pi).value.data()[ei];
            target.param_mut(pi).value.data_mut()[ei] = orig + step;
            let plus = target.loss()?;
            target.param_mut(pi).value.data_mut()[ei] = orig - step;
            let minus = target.loss()?;
            target.param_mut(pi).value.data_mut()[ei] = orig;
            let err = relative_error(a, (plus - minus) / (2.0 * step));
            if err > entry.max_rel_err {
                entry.max_rel_err = err;
                entry.worst_index = ei;
            }
        }
        report.max_rel_err = report.max_rel_err.max(entry.max_rel_err);
        report.params.push(entry);
    }
    Ok(report)
}

/// Wraps a layer with loss `sum(r * layer(x))` for a fixed random projection
/// `r`, treating the input `x` as an extra parameter so input gradients are
/// checked too.
pub struct LayerProbe<L> {
    pub layer: L,
    pub input: Parameter<f64>,
    pub projection: Tensor<f64>,
}

impl<L: Layer<f64>> LayerProbe<L> {
    pub fn new(layer: L, input: Tensor<f64>, rng: &mut Rng) -> Result<Self> {
        let out = layer.infer(&input)?;
        let projection = Tensor::new(
            out.shape(),
            (0..out.len()).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        )?;
        Ok(Self {
            layer,
            input: Parameter::new("input", input),
            projection,
        })
    }

    fn project(&self, out: &Tensor<f64>) -> f64 {
        out.data().iter().zip(self.projection.data()).map(|(a, b)| a * b).sum()
    }
}

impl<L: Layer<f64>> GradCheck for LayerProbe<L> {
    fn num_params(&self) -> usize {
        self.layer.params().len() + 1
    }

    fn param_mut(&mut self, index: usize) -> &mut Parameter<f64> {
        let n = self.layer.params().len();
        if index == n {
            &mut self.input
        } else {
            self.layer.params_mut().swap_remove(index)
        }
    }

    fn loss(&mut self) -> Result<f64> {
        let out = self.layer.infer(&self.input.value)?;
        Ok(self.project(&out))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        for p in self.layer.params_mut() {
            p.zero_grad();
        }
        self.input.zero_grad();
        let out = self.layer.forward(&self.input.value, None)?;
        let dx = self.layer.backward(&self.projection)?;
        self.input.grad = dx;
        Ok(self.project(&out))
    }
}

/// Binary cross-entropy as a function of the probabilities.
pub struct BceProbe {
    pub probs: Parameter<f64>,
    pub labels: Vec<f64>,
}

impl GradCheck for BceProbe {
    fn num_params(&self) -> usize {
        1
    }

    fn param_mut(&mut self, _index: usize) -> &mut Parameter<f64> {
        &mut self.probs
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(binary_cross_entropy(&self.probs.value, &self.labels)?.loss)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        let out = binary_cross_entropy(&self.probs.value, &self.labels)?;
        self.probs.grad = out.grad;
        Ok(out.loss)
    }
}

/// Softmax followed by sparse categorical cross-entropy, differentiated with
/// respect to the logits.
pub struct SoftmaxCeProbe {
    pub logits: Parameter<f64>,
    pub labels: Vec<usize>,
}

impl GradCheck for SoftmaxCeProbe {
    fn num_params(&self) -> usize {
        1
    }

    fn param_mut(&mut self, _index: usize) -> &mut Parameter<f64> {
        &mut self.logits
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(sparse_categorical_cross_entropy(&softmax(&self.logits.value), &self.labels)?.loss)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        let out = sparse_categorical_cross_entropy(&softmax(&self.logits.value), &self.labels)?;
        self.logits.grad = out.grad;
        Ok(out.loss)
    }
}
