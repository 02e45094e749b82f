//! LSTM layer with backpropagation through time.
//!
//! Gate pre-activations are `z = W_x x_t + W_h h_{t-1} + b`, stacked in the
//! order input, forget, candidate, output:
//!
//! ```text
//! i = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! `W_x` is `[4H, D]`, `W_h` is `[4H, H]` and `b` is `[4H]`, so a layer holds
//! `4H (D + H + 1)` parameters. Sequences enter as `[T, D]` with zero initial
//! state.

use super::activation::sigmoid_scalar;
use super::dense::dot;
use super::Layer;
use crate::error::{shape_err, Error, Result};
use crate::rng::Rng;
use crate::tensor::{Parameter, Scalar, Tensor};

#[derive(Debug, Clone)]
pub struct Lstm<F: Scalar = f32> {
    pub w_x: Parameter<F>,
    pub w_h: Parameter<F>,
    pub bias: Parameter<F>,
    pub return_sequences: bool,
    cache: Option<LstmCache<F>>,
}

/// Per-step activations saved for BPTT. `h` and `c` hold `T + 1` rows with
/// the zero initial state first.
#[derive(Debug, Clone)]
struct LstmCache<F> {
    steps: usize,
    x: Vec<F>,
    h: Vec<F>,
    c: Vec<F>,
    gates: Vec<F>,
    tanh_c: Vec<F>,
}

impl<F: Scalar> Lstm<F> {
    pub fn new(w_x: Parameter<F>, w_h: Parameter<F>, bias: Parameter<F>, return_sequences: bool) -> Result<Self> {
        let ok = match (w_x.shape(), w_h.shape(), bias.shape()) {
            (&[gx, _], &[gh, hidden], &[gb]) => gx == 4 * hidden && gh == gx && gb == gx && hidden > 0,
            _ => false,
        };
        if !ok {
            return Err(shape_err(
                "lstm",
                format!("w_x {:?}, w_h {:?}, bias {:?}", w_x.shape(), w_h.shape(), bias.shape()),
            ));
        }
        Ok(Self {
            w_x,
            w_h,
            bias,
            return_sequences,
            cache: None,
        })
    }

    pub fn zeros(name: &str, input_dim: usize, hidden: usize, return_sequences: bool) -> Self {
        Self::new(
            Parameter::zeros(format!("{name}.w_x"), &[4 * hidden, input_dim]),
            Parameter::zeros(format!("{name}.w_h"), &[4 * hidden, hidden]),
            Parameter::zeros(format!("{name}.bias"), &[4 * hidden]),
            return_sequences,
        )
        .expect("valid lstm shape")
    }

    pub fn hidden(&self) -> usize {
        self.w_h.shape()[1]
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.shape()[1]
    }

    #[allow(clippy::too_many_arguments)]
    fn step_into(&self, x: &[F], h_prev: &[F], c_prev: &[F], gates: &mut [F], c: &mut [F], tanh_c: &mut [F], h: &mut [F]) {
        let hidden = self.hidden();
        let d = self.input_dim();
        let wx = self.w_x.value.data();
        let wh = self.w_h.value.data();
        let b = self.bias.value.data();
        for (r, z) in gates.iter_mut().enumerate() {
            *z = b[r] + dot(&wx[r * d..(r + 1) * d], x) + dot(&wh[r * hidden..(r + 1) * hidden], h_prev);
        }
        for j in 0..hidden {
            let i = sigmoid_scalar(gates[j]);
            let f = sigmoid_scalar(gates[hidden + j]);
            let g = gates[2 * hidden + j].tanh();
            let o = sigmoid_scalar(gates[3 * hidden + j]);
            gates[j] = i;
            gates[hidden + j] = f;
            gates[2 * hidden + j] = g;
            gates[3 * hidden + j] = o;
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
    }

    /// One cell update; returns `(h_t, c_t)`.
    pub fn step(&self, x_t: &Tensor<F>, h_prev: &Tensor<F>, c_prev: &Tensor<F>) -> Result<(Tensor<F>, Tensor<F>)> {
        let hidden = self.hidden();
        if x_t.shape() != [self.input_dim()] || h_prev.shape() != [hidden] || c_prev.shape() != [hidden] {
            return Err(shape_err(
                "lstm_step",
                format!("x {:?}, h {:?}, c {:?}", x_t.shape(), h_prev.shape(), c_prev.shape()),
            ));
        }
        let mut gates = vec![F::ZERO; 4 * hidden];
        let mut c = vec![F::ZERO; hidden];
        let mut tc = vec![F::ZERO; hidden];
        let mut h = vec![F::ZERO; hidden];
        self.step_into(x_t.data(), h_prev.data(), c_prev.data(), &mut gates, &mut c, &mut tc, &mut h);
        Ok((Tensor::vector(h), Tensor::vector(c)))
    }

    fn check_sequence(&self, seq: &Tensor<F>) -> Result<usize> {
        match *seq.shape() {
            [steps, d] if d == self.input_dim() => Ok(steps),
            [_, d] => Err(shape_err("lstm", format!("input dim {d}, layer expects {}", self.input_dim()))),
            _ => Err(shape_err("lstm", format!("expected [T, D], got {:?}", seq.shape()))),
        }
    }

    fn run(&self, seq: &Tensor<F>) -> Result<LstmCache<F>> {
        let steps = self.check_sequence(seq)?;
        let hidden = self.hidden();
        let d = self.input_dim();
        let mut cache = LstmCache {
            steps,
            x: seq.data().to_vec(),
            h: vec![F::ZERO; (steps + 1) * hidden],
            c: vec![F::ZERO; (steps + 1) * hidden],
            gates: vec![F::ZERO; steps * 4 * hidden],
            tanh_c: vec![F::ZERO; steps * hidden],
        };
        for t in 0..steps {
            let (h_prev, h_next) = cache.h.split_at_mut((t + 1) * hidden);
            let (c_prev, c_next) = cache.c.split_at_mut((t + 1) * hidden);
            self.step_into(
                &cache.x[t * d..(t + 1) * d],
                &h_prev[t * hidden..],
                &c_prev[t * hidden..],
                &mut cache.gates[t * 4 * hidden..(t + 1) * 4 * hidden],
                &mut c_next[..hidden],
                &mut cache.tanh_c[t * hidden..(t + 1) * hidden],
                &mut h_next[..hidden],
            );
        }
        Ok(cache)
    }

    fn output(&self, cache: &LstmCache<F>, return_sequences: bool) -> Result<Tensor<F>> {
        let hidden = self.hidden();
        if return_sequences {
            Tensor::new(&[cache.steps, hidden], cache.h[hidden..].to_vec())
        } else {
            Ok(Tensor::vector(cache.h[cache.steps * hidden..].to_vec()))
        }
    }

    fn bptt(&mut self, grad_out: &Tensor<F>, cache: &LstmCache<F>) -> Result<Tensor<F>> {
        let hidden = self.hidden();
        let d = self.input_dim();
        let steps = cache.steps;
        let expected: Vec<usize> = if self.return_sequences {
            vec![steps, hidden]
        } else {
            vec![hidden]
        };
        if grad_out.shape() != expected.as_slice() {
            return Err(shape_err(
                "lstm_backward",
                format!("grad {:?}, expected {expected:?}", grad_out.shape()),
            ));
        }
        let g_out = grad_out.data();
        let wx = self.w_x.value.data();
        let wh = self.w_h.value.data();
        let dwx = self.w_x.grad.data_mut();
        let dwh = self.w_h.grad.data_mut();
        let db = self.bias.grad.data_mut();

        let mut dx = vec![F::ZERO; steps * d];
        let mut dh_next = vec![F::ZERO; hidden];
        let mut dc_next = vec![F::ZERO; hidden];
        let mut dz = vec![F::ZERO; 4 * hidden];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * 4 * hidden..(t + 1) * 4 * hidden];
            let tanh_c = &cache.tanh_c[t * hidden..(t + 1) * hidden];
            let c_prev = &cache.c[t * hidden..(t + 1) * hidden];
            let h_prev = &cache.h[t * hidden..(t + 1) * hidden];
            let x_t = &cache.x[t * d..(t + 1) * d];
            for j in 0..hidden {
                let mut dh = dh_next[j];
                if self.return_sequences {
                    dh += g_out[t * hidden + j];
                } else if t + 1 == steps {
                    dh += g_out[j];
                }
                let (i, f, g, o) = (gates[j], gates[hidden + j], gates[2 * hidden + j], gates[3 * hidden + j]);
                let tc = tanh_c[j];
                let dc = dc_next[j] + dh * o * (F::ONE - tc * tc);
                dz[j] = dc * g * i * (F::ONE - i);
                dz[hidden + j] = dc * c_prev[j] * f * (F::ONE - f);
                dz[2 * hidden + j] = dc * i * (F::ONE - g * g);
                dz[3 * hidden + j] = dh * tc * o * (F::ONE - o);
                dc_next[j] = dc * f;
            }
            dh_next.iter_mut().for_each(|v| *v = F::ZERO);
            let dx_t = &mut dx[t * d..(t + 1) * d];
            for (r, &gz) in dz.iter().enumerate() {
                db[r] += gz;
                let wx_row = &wx[r * d..(r + 1) * d];
                for ((dw, &xv), (dxv, &wv)) in dwx[r * d..(r + 1) * d].iter_mut().zip(x_t).zip(dx_t.iter_mut().zip(wx_row)) {
                    *dw += gz * xv;
                    *dxv += gz * wv;
                }
                let wh_row = &wh[r * hidden..(r + 1) * hidden];
                for ((dw, &hv), (dhv, &wv)) in dwh[r * hidden..(r + 1) * hidden]
                    .iter_mut()
                    .zip(h_prev)
                    .zip(dh_next.iter_mut().zip(wh_row))
                {
                    *dw += gz * hv;
                    *dhv += gz * wv;
                }
            }
        }
        Tensor::new(&[steps, d], dx)
    }
}

/// Runs `layer` over `seq` (`[T, D]`) from zero state. Returns `[T, H]` when
/// `return_sequences`, otherwise the final hidden state `[H]`.
pub fn lstm_forward<F: Scalar>(seq: &Tensor<F>, layer: &Lstm<F>, return_sequences: bool) -> Result<Tensor<F>> {
    let cache = layer.run(seq)?;
    layer.output(&cache, return_sequences)
}

impl<F: Scalar> Layer<F> for Lstm<F> {
    fn kind(&self) -> &'static str {
        "lstm"
    }

    fn forward(&mut self, input: &Tensor<F>, _rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        let cache = self.run(input)?;
        let out = self.output(&cache, self.return_sequences)?;
        self.cache = Some(cache);
        Ok(out)
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        lstm_forward(input, self, self.return_sequences)
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let cache = self.cache.take().ok_or(Error::MissingCache("lstm"))?;
        self.bptt(grad_out, &cache)
    }

    fn params(&self) -> Vec<&Parameter<F>> {
        vec![&self.w_x, &self.w_h, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.bias]
    }
}
