//! Valid (unpadded), stride-1 one-dimensional convolution computed as
//! cross-correlation over `[channels x length]` inputs.

use super::Layer;
use crate::error::{shape_err, Error, Result};
use crate::rng::Rng;
use crate::tensor::{Parameter, Scalar, Tensor};

fn check<F: Scalar>(input: &Tensor<F>, weight: &Tensor<F>, bias: &Tensor<F>) -> Result<(usize, usize, usize, usize)> {
    let (&[c_in, len], &[c_out, w_in, k]) = (input.shape(), weight.shape()) else {
        return Err(shape_err(
            "conv1d",
            format!("input {:?} / weight {:?}", input.shape(), weight.shape()),
        ));
    };
    if w_in != c_in {
        return Err(shape_err("conv1d", format!("input has {c_in} channels, kernel expects {w_in}")));
    }
    if bias.shape() != [c_out] {
        return Err(shape_err("conv1d", format!("bias {:?} for {c_out} filters", bias.shape())));
    }
    if len < k {
        return Err(shape_err("conv1d", format!("length {len} shorter than kernel {k}")));
    }
    Ok((c_in, len, c_out, k))
}

/// `out[c][t] = bias[c] + sum_{i,k} weight[c][i][k] * input[i][t + k]`.
pub fn conv1d_forward<F: Scalar>(input: &Tensor<F>, weight: &Tensor<F>, bias: &Tensor<F>) -> Result<Tensor<F>> {
    let (c_in, len, c_out, k) = check(input, weight, bias)?;
    let out_len = len - k + 1;
    let x = input.data();
    let w = weight.data();
    let mut out = vec![F::ZERO; c_out * out_len];
    for c in 0..c_out {
        let row = &mut out[c * out_len..(c + 1) * out_len];
        row.iter_mut().for_each(|v| *v = bias.data()[c]);
        for i in 0..c_in {
            let xi = &x[i * len..(i + 1) * len];
            for kk in 0..k {
                let wv = w[(c * c_in + i) * k + kk];
                for (o, &xv) in row.iter_mut().zip(&xi[kk..kk + out_len]) {
                    *o += wv * xv;
                }
            }
        }
    }
    Tensor::new(&[c_out, out_len], out)
}

/// Returns the input gradient and accumulates into `grad_weight` / `grad_bias`.
pub fn conv1d_backward<F: Scalar>(
    grad_out: &Tensor<F>,
    input: &Tensor<F>,
    weight: &Tensor<F>,
    grad_weight: &mut Tensor<F>,
    grad_bias: &mut Tensor<F>,
) -> Result<Tensor<F>> {
    let bias_shape = [weight.shape().first().copied().unwrap_or(0)];
    let (c_in, len, c_out, k) = check(input, weight, &Tensor::zeros(&bias_shape))?;
    let out_len = len - k + 1;
    if grad_out.shape() != [c_out, out_len] {
        return Err(shape_err(
            "conv1d_backward",
            format!("grad {:?}, expected [{c_out}, {out_len}]", grad_out.shape()),
        ));
    }
    if grad_weight.shape() != weight.shape() || grad_bias.shape() != bias_shape {
        return Err(shape_err("conv1d_backward", "gradient buffers"));
    }
    let x = input.data();
    let w = weight.data();
    let g = grad_out.data();
    let mut dx = vec![F::ZERO; c_in * len];
    let dw = grad_weight.data_mut();
    for c in 0..c_out {
        let gc = &g[c * out_len..(c + 1) * out_len];
        grad_bias.data_mut()[c] += gc.iter().copied().sum::<F>();
        for i in 0..c_in {
            let xi = &x[i * len..(i + 1) * len];
            let dxi = &mut dx[i * len..(i + 1) * len];
            for kk in 0..k {
                let idx = (c * c_in + i) * k + kk;
                let mut acc = F::ZERO;
                for (&gv, &xv) in gc.iter().zip(&xi[kk..kk + out_len]) {
                    acc += gv * xv;
                }
                dw[idx] += acc;
                let wv = w[idx];
                for (d, &gv) in dxi[kk..kk + out_len].iter_mut().zip(gc) {
                    *d += wv * gv;
                }
            }
        }
    }
    Tensor::new(&[c_in, len], dx)
}

#[derive(Debug, Clone)]
pub struct Conv1d<F: Scalar = f32> {
    pub weight: Parameter<F>,
    pub bias: Parameter<F>,
    cache: Option<Tensor<F>>,
}

impl<F: Scalar> Conv1d<F> {
    pub fn new(weight: Parameter<F>, bias: Parameter<F>) -> Result<Self> {
        match weight.shape() {
            &[c_out, _, k] if k >= 1 && bias.shape() == [c_out] => Ok(Self {
                weight,
                bias,
                cache: None,
            }),
            s => Err(shape_err("conv1d", format!("weight {s:?} / bias {:?}", bias.shape()))),
        }
    }

    pub fn zeros(name: &str, c_in: usize, c_out: usize, kernel: usize) -> Self {
        Self::new(
            Parameter::zeros(format!("{name}.weight"), &[c_out, c_in, kernel]),
            Parameter::zeros(format!("{name}.bias"), &[c_out]),
        )
        .expect("valid conv shape")
    }

    pub fn filters(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }
}

impl<F: Scalar> Layer<F> for Conv1d<F> {
    fn kind(&self) -> &'static str {
        "conv1d"
    }

    fn forward(&mut self, input: &Tensor<F>, _rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        let out = conv1d_forward(input, &self.weight.value, &self.bias.value)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        conv1d_forward(input, &self.weight.value, &self.bias.value)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let input = self.cache.take().ok_or(Error::MissingCache("conv1d"))?;
        conv1d_backward(
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
