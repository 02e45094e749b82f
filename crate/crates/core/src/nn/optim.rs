//! Adam with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::tensor::{Parameter, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update of `param` using its accumulated gradient. `step` is the
/// 1-based update count used for bias correction.
pub fn adam_update<F: Scalar>(param: &mut Parameter<F>, step: u64, cfg: &AdamConfig) -> Result<()> {
    assert!(step >= 1, "adam step count starts at 1");
    if !param.grad.all_finite() {
        return Err(Error::NonFiniteGradient(param.name.clone()));
    }
    let b1 = F::from_f64(cfg.beta1);
    let b2 = F::from_f64(cfg.beta2);
    let lr = F::from_f64(cfg.learning_rate);
    let eps = F::from_f64(cfg.epsilon);
    let t = step.min(i32::MAX as u64) as i32;
    let c1 = F::ONE - b1.powi(t);
    let c2 = F::ONE - b2.powi(t);
    let Parameter {
        value,
        grad,
        adam_m,
        adam_v,
        ..
    } = param;
    for (((w, &g), m), v) in value
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(adam_m.data_mut())
        .zip(adam_v.data_mut())
    {
        *m = b1 * *m + (F::ONE - b1) * g;
        *v = b2 * *v + (F::ONE - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Updates every parameter, or none if any gradient is non-finite.
    pub fn step<'a, F: Scalar>(&mut self, params: impl IntoIterator<Item = &'a mut Parameter<F>>) -> Result<()> {
        let mut params: Vec<&mut Parameter<F>> = params.into_iter().collect();
        if let Some(bad) = params.iter().find(|p| !p.grad.all_finite()) {
            return Err(Error::NonFiniteGradient(bad.name.clone()));
        }
        self.step += 1;
        for p in params.iter_mut() {
            adam_update(p, self.step, &self.config)?;
        }
        Ok(())
    }
}
