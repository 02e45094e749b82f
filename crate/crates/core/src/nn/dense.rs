//! Fully connected layer `out = W x + b`.

use super::Layer;
use crate::error::{shape_err, Error, Result};
use crate::rng::Rng;
use crate::tensor::{Parameter, Scalar, Tensor};

pub fn dense_forward<F: Scalar>(input: &Tensor<F>, weight: &Tensor<F>, bias: &Tensor<F>) -> Result<Tensor<F>> {
    let &[m, n] = weight.shape() else {
        return Err(shape_err("dense", format!("weight {:?}", weight.shape())));
    };
    if input.shape() != [n] || bias.shape() != [m] {
        return Err(shape_err(
            "dense",
            format!("input {:?}, weight [{m}, {n}], bias {:?}", input.shape(), bias.shape()),
        ));
    }
    let x = input.data();
    let out = weight
        .data()
        .chunks_exact(n)
        .zip(bias.data())
        .map(|(row, &b)| b + dot(row, x))
        .collect();
    Tensor::new(&[m], out)
}

#[inline]
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut acc = F::ZERO;
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn dense_backward<F: Scalar>(
    grad_out: &Tensor<F>,
    input: &Tensor<F>,
    weight: &Tensor<F>,
    grad_weight: &mut Tensor<F>,
    grad_bias: &mut Tensor<F>,
) -> Result<Tensor<F>> {
    let &[m, n] = weight.shape() else {
        return Err(shape_err("dense_backward", format!("weight {:?}", weight.shape())));
    };
    if grad_out.shape() != [m] || input.shape() != [n] {
        return Err(shape_err(
            "dense_backward",
            format!("grad {:?}, input {:?} for weight [{m}, {n}]", grad_out.shape(), input.shape()),
        ));
    }
    let x = input.data();
    let mut dx = vec![F::ZERO; n];
    for (((&g, w_row), dw_row), db) in grad_out
        .data()
        .iter()
        .zip(weight.data().chunks_exact(n))
        .zip(grad_weight.data_mut().chunks_exact_mut(n))
        .zip(grad_bias.data_mut())
    {
        *db += g;
        for ((dw, &xv), (d, &wv)) in dw_row.iter_mut().zip(x).zip(dx.iter_mut().zip(w_row)) {
            *dw += g * xv;
            *d += g * wv;
        }
    }
    Tensor::new(&[n], dx)
}

#[derive(Debug, Clone)]
pub struct Dense<F: Scalar = f32> {
    pub weight: Parameter<F>,
    pub bias: Parameter<F>,
    cache: Option<Tensor<F>>,
}

impl<F: Scalar> Dense<F> {
    pub fn new(weight: Parameter<F>, bias: Parameter<F>) -> Result<Self> {
        match weight.shape() {
            &[m, _] if bias.shape() == [m] => Ok(Self {
                weight,
                bias,
                cache: None,
            }),
            s => Err(shape_err("dense", format!("weight {s:?} / bias {:?}", bias.shape()))),
        }
    }

    pub fn zeros(name: &str, inputs: usize, outputs: usize) -> Self {
        Self::new(
            Parameter::zeros(format!("{name}.weight"), &[outputs, inputs]),
            Parameter::zeros(format!("{name}.bias"), &[outputs]),
        )
        .expect("valid dense shape")
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }
}

impl<F: Scalar> Layer<F> for Dense<F> {
    fn kind(&self) -> &'static str {
        "dense"
    }

    fn forward(&mut self, input: &Tensor<F>, _rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        let out = dense_forward(input, &self.weight.value, &self.bias.value)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        dense_forward(input, &self.weight.value, &self.bias.value)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let input = self.cache.take().ok_or(Error::MissingCache("dense"))?;
        dense_backward(
            grad_out,
            &input,
            &self.weight.value,
            &mut self.weight.grad,
            &mut self.bias.grad,
        )
    }

    fn params(&self) -> Vec<&Parameter<F>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
