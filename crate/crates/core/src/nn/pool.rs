//! Non-overlapping 1-D max pooling (stride equals pool size; trailing
//! remainder dropped; ties resolve to the lower index).

use super::Layer;
use crate::error::{shape_err, Error, Result};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

/// Returns the pooled tensor and the flat input index chosen for each output.
pub fn maxpool1d_forward<F: Scalar>(input: &Tensor<F>, pool: usize) -> Result<(Tensor<F>, Vec<usize>)> {
    let &[channels, len] = input.shape() else {
        return Err(shape_err("maxpool1d", format!("expected [C, L], got {:?}", input.shape())));
    };
    if pool == 0 || len < pool {
        return Err(shape_err("maxpool1d", format!("length {len} with pool {pool}")));
    }
    let out_len = len / pool;
    let x = input.data();
    let mut out = Vec::with_capacity(channels * out_len);
    let mut argmax = Vec::with_capacity(channels * out_len);
    for c in 0..channels {
        for t in 0..out_len {
            let start = c * len + t * pool;
            let mut best = start;
            for j in start + 1..start + pool {
                if x[j] > x[best] {
                    best = j;
                }
            }
            out.push(x[best]);
            argmax.push(best);
        }
    }
    Ok((Tensor::new(&[channels, out_len], out)?, argmax))
}

pub fn maxpool1d_backward<F: Scalar>(grad_out: &Tensor<F>, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor<F>> {
    if grad_out.len() != argmax.len() {
        return Err(shape_err(
            "maxpool1d_backward",
            format!("{} gradients for {} pooled cells", grad_out.len(), argmax.len()),
        ));
    }
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&g, &i) in grad_out.data().iter().zip(argmax) {
        d[i] += g;
    }
    Ok(dx)
}

#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pub pool: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool1d {
    pub fn new(pool: usize) -> Self {
        Self { pool, cache: None }
    }
}

impl<F: Scalar> Layer<F> for MaxPool1d {
    fn kind(&self) -> &'static str {
        "maxpool1d"
    }

    fn forward(&mut self, input: &Tensor<F>, _rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        let (out, argmax) = maxpool1d_forward(input, self.pool)?;
        self.cache = Some((argmax, input.shape().to_vec()));
        Ok(out)
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        maxpool1d_forward(input, self.pool).map(|(out, _)| out)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let (argmax, shape) = self.cache.take().ok_or(Error::MissingCache("maxpool1d"))?;
        maxpool1d_backward(grad_out, &argmax, &shape)
    }
}
