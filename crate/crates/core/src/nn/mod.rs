//! Neural-network numeric core: the layers both detectors are built from,
//! their backward passes, losses, and the Adam optimizer.
//!
//! Layers work on a single sample at a time. A layer caches what its
//! backward pass needs during [`Layer::forward`]; [`Layer::backward`]
//! consumes that cache and accumulates parameter gradients. [`Layer::infer`]
//! is the cache-free path used for prediction.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod optim;
pub mod pool;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Parameter, Scalar, Tensor};

pub use activation::{relu, sigmoid, softmax, tanh};
pub use conv::{conv1d_backward, conv1d_forward, Conv1d};
pub use dense::{dense_backward, dense_forward, Dense};
pub use dropout::{dropout, Dropout};
pub use loss::{binary_cross_entropy, sparse_categorical_cross_entropy};
pub use lstm::{lstm_forward, Lstm};
pub use optim::{adam_update, Adam, AdamConfig};
pub use pool::{maxpool1d_backward, maxpool1d_forward, MaxPool1d};

pub trait Layer<F: Scalar> {
    fn kind(&self) -> &'static str;

    /// Training-time forward. Passing an `Rng` enables stochastic layers
    /// (dropout); `None` makes them the identity.
    fn forward(&mut self, input: &Tensor<F>, rng: Option<&mut Rng>) -> Result<Tensor<F>>;

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>>;

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>>;

    fn params(&self) -> Vec<&Parameter<F>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu<F: Scalar = f32> {
    cache: Option<Tensor<F>>,
}

impl<F: Scalar> Layer<F> for Relu<F> {
    fn kind(&self) -> &'static str {
        "relu"
    }

    fn forward(&mut self, input: &Tensor<F>, _rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        self.cache = Some(input.clone());
        Ok(relu(input))
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        Ok(relu(input))
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let input = self.cache.take().ok_or(Error::MissingCache("relu"))?;
        activation::relu_backward(grad_out, &input)
    }
}

/// Reshapes any input to rank 1.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    cache: Option<Vec<usize>>,
}

impl<F: Scalar> Layer<F> for Flatten {
    fn kind(&self) -> &'static str {
        "flatten"
    }

    fn forward(&mut self, input: &Tensor<F>, _rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        self.cache = Some(input.shape().to_vec());
        Layer::<F>::infer(self, input)
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        input.clone().reshape(&[input.len()])
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let shape = self.cache.take().ok_or(Error::MissingCache("flatten"))?;
        grad_out.clone().reshape(&shape)
    }
}

/// Closed set of layers the detectors use, so networks stay `Clone`.
#[derive(Debug, Clone)]
pub enum AnyLayer<F: Scalar = f32> {
    Conv1d(Conv1d<F>),
    Relu(Relu<F>),
    MaxPool1d(MaxPool1d),
    Flatten(Flatten),
    Dense(Dense<F>),
    Lstm(Lstm<F>),
    Dropout(Dropout<F>),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $body:expr) => {
        match $self {
            AnyLayer::Conv1d($l) => $body,
            AnyLayer::Relu($l) => $body,
            AnyLayer::MaxPool1d($l) => $body,
            AnyLayer::Flatten($l) => $body,
            AnyLayer::Dense($l) => $body,
            AnyLayer::Lstm($l) => $body,
            AnyLayer::Dropout($l) => $body,
        }
    };
}

impl<F: Scalar> Layer<F> for AnyLayer<F> {
    fn kind(&self) -> &'static str {
        dispatch!(self, l => Layer::<F>::kind(l))
    }

    fn forward(&mut self, input: &Tensor<F>, rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        dispatch!(self, l => l.forward(input, rng))
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        dispatch!(self, l => l.infer(input))
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        dispatch!(self, l => l.backward(grad_out))
    }

    fn params(&self) -> Vec<&Parameter<F>> {
        dispatch!(self, l => l.params())
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        dispatch!(self, l => l.params_mut())
    }
}

/// Layers applied in order.
#[derive(Debug, Clone, Default)]
pub struct Sequential<F: Scalar = f32> {
    pub layers: Vec<AnyLayer<F>>,
}

impl<F: Scalar> Sequential<F> {
    pub fn new(layers: Vec<AnyLayer<F>>) -> Self {
        Self { layers }
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

impl<F: Scalar> Layer<F> for Sequential<F> {
    fn kind(&self) -> &'static str {
        "sequential"
    }

    fn forward(&mut self, input: &Tensor<F>, mut rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, rng.as_deref_mut())?;
        }
        Ok(x)
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.infer(&x)?;
        }
        Ok(x)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    fn params(&self) -> Vec<&Parameter<F>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_backward_masks_negative_inputs() {
        let mut r = Relu::<f64>::default();
        r.forward(&Tensor::vector(vec![-1.0, 2.0, 0.0]), None).unwrap();
        let g = r.backward(&Tensor::vector(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn flatten_round_trips_shape() {
        let mut f = Flatten::default();
        let x = Tensor::<f64>::zeros(&[3, 4]);
        let y = f.forward(&x, None).unwrap();
        assert_eq!(y.shape(), &[12]);
        assert_eq!(Layer::<f64>::backward(&mut f, &y).unwrap().shape(), &[3, 4]);
    }

    #[test]
    fn sequential_infer_matches_forward() {
        let mut net = Sequential::<f64>::new(vec![
            AnyLayer::Dense(Dense::zeros("a", 3, 4)),
            AnyLayer::Relu(Relu::default()),
            AnyLayer::Dense(Dense::zeros("b", 4, 2)),
        ]);
        let mut rng = Rng::new(0);
        for p in net.params_mut() {
            p.value.data_mut().iter_mut().for_each(|v| *v = rng.uniform(-1., 1.));
        }
        let x = Tensor::vector(vec![0.1, 0.2, -0.3]);
        assert_eq!(net.infer(&x).unwrap(), net.forward(&x, None).unwrap());
        assert_eq!(net.parameter_count(), 3 * 4 + 4 + 4 * 2 + 2);
    }
}
