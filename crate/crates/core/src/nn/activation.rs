//! Elementwise activations and their backward forms.

use crate::error::{shape_err, Result};
use crate::tensor::{Scalar, Tensor};

#[inline]
pub fn sigmoid_scalar<F: Scalar>(x: F) -> F {
    if x >= F::ZERO {
        F::ONE / (F::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::ONE + e)
    }
}

pub fn relu<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    x.map(|v| if v > F::ZERO { v } else { F::ZERO })
}

pub fn sigmoid<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    x.map(sigmoid_scalar)
}

pub fn tanh<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    x.map(|v| v.tanh())
}

/// Softmax over the final axis, max-subtracted.
pub fn softmax<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    let width = *x.shape().last().expect("rank >= 1");
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(width) {
        softmax_in_place(row);
    }
    out
}

pub(crate) fn softmax_in_place<F: Scalar>(row: &mut [F]) {
    let max = row.iter().copied().fold(row[0], F::max);
    let mut total = F::ZERO;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v = *v / total;
    }
}

fn same_shape<F: Scalar>(op: &'static str, a: &Tensor<F>, b: &Tensor<F>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `input` is the pre-activation.
pub fn relu_backward<F: Scalar>(grad: &Tensor<F>, input: &Tensor<F>) -> Result<Tensor<F>> {
    same_shape("relu_backward", grad, input)?;
    let mut out = grad.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x <= F::ZERO {
            *g = F::ZERO;
        }
    }
    Ok(out)
}

/// `output` is the sigmoid output.
pub fn sigmoid_backward<F: Scalar>(grad: &Tensor<F>, output: &Tensor<F>) -> Result<Tensor<F>> {
    same_shape("sigmoid_backward", grad, output)?;
    let mut out = grad.clone();
    for (g, &y) in out.data_mut().iter_mut().zip(output.data()) {
        *g *= y * (F::ONE - y);
    }
    Ok(out)
}

/// `output` is the tanh output.
pub fn tanh_backward<F: Scalar>(grad: &Tensor<F>, output: &Tensor<F>) -> Result<Tensor<F>> {
    same_shape("tanh_backward", grad, output)?;
    let mut out = grad.clone();
    for (g, &y) in out.data_mut().iter_mut().zip(output.data()) {
        *g *= F::ONE - y * y;
    }
    Ok(out)
}

/// Jacobian-vector product of softmax along the final axis: `y * (g - <g, y>)`.
pub fn softmax_backward<F: Scalar>(grad: &Tensor<F>, output: &Tensor<F>) -> Result<Tensor<F>> {
    same_shape("softmax_backward", grad, output)?;
    let width = *output.shape().last().expect("rank >= 1");
    let mut out = grad.clone();
    for (g, y) in out
        .data_mut()
        .chunks_mut(width)
        .zip(output.data().chunks(width))
    {
        let dot: F = g.iter().zip(y).map(|(&a, &b)| a * b).sum();
        for (gi, &yi) in g.iter_mut().zip(y) {
            *gi = yi * (*gi - dot);
        }
    }
    Ok(out)
}
