//! Inverted dropout: survivors are scaled by `1 / (1 - rate)` while training,
//! inference is the identity.

use super::Layer;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

fn validate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidRate(rate))
    }
}

/// Per-element multipliers: `0` for dropped entries, `1 / (1 - rate)` otherwise.
fn draw_mask<F: Scalar>(len: usize, rate: f64, rng: &mut Rng) -> Vec<F> {
    let keep = F::from_f64(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.next_f64() < rate { F::ZERO } else { keep })
        .collect()
}

pub fn dropout<F: Scalar>(input: &Tensor<F>, rate: f64, rng: &mut Rng, training: bool) -> Result<Tensor<F>> {
    validate(rate)?;
    if !training || rate == 0.0 {
        return Ok(input.clone());
    }
    let mask = draw_mask::<F>(input.len(), rate, rng);
    let mut out = input.clone();
    for (v, m) in out.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Dropout<F: Scalar = f32> {
    rate: f64,
    // `None` inside the cache means the forward pass was the identity.
    cache: Option<Option<Vec<F>>>,
}

impl<F: Scalar> Dropout<F> {
    pub fn new(rate: f64) -> Result<Self> {
        validate(rate)?;
        Ok(Self { rate, cache: None })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl<F: Scalar> Layer<F> for Dropout<F> {
    fn kind(&self) -> &'static str {
        "dropout"
    }

    /// Training mode is selected by passing an `Rng`.
    fn forward(&mut self, input: &Tensor<F>, rng: Option<&mut Rng>) -> Result<Tensor<F>> {
        match rng {
            Some(rng) if self.rate > 0.0 => {
                let mask = draw_mask::<F>(input.len(), self.rate, rng);
                let mut out = input.clone();
                for (v, &m) in out.data_mut().iter_mut().zip(&mask) {
                    *v *= m;
                }
                self.cache = Some(Some(mask));
                Ok(out)
            }
            _ => {
                self.cache = Some(None);
                Ok(input.clone())
            }
        }
    }

    fn infer(&self, input: &Tensor<F>) -> Result<Tensor<F>> {
        Ok(input.clone())
    }

    fn backward(&mut self, grad_out: &Tensor<F>) -> Result<Tensor<F>> {
        let mask = self.cache.take().ok_or(Error::MissingCache("dropout"))?;
        let mut g = grad_out.clone();
        if let Some(mask) = mask {
            if mask.len() != g.len() {
                return Err(crate::error::shape_err("dropout_backward", "mask length"));
            }
            for (v, m) in g.data_mut().iter_mut().zip(mask) {
                *v *= m;
            }
        }
        Ok(g)
    }
}
