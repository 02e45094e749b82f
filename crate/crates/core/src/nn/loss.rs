//! Batch-averaged cross-entropy losses.
//!
//! Probabilities are clamped to `[EPSILON, 1 - EPSILON]` before taking logs.

use crate::error::{shape_err, Error, Result};
use crate::tensor::{Scalar, Tensor};

pub const EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<F> {
    /// Mean loss over the batch.
    pub loss: F,
    pub grad: Tensor<F>,
}

fn clamp<F: Scalar>(p: F) -> F {
    let lo = F::from_f64(EPSILON);
    let hi = F::ONE - lo;
    if p < lo {
        lo
    } else if p > hi {
        hi
    } else {
        p
    }
}

fn check_binary<F: Scalar>(p: &Tensor<F>, y: &[F]) -> Result<()> {
    if p.len() != y.len() {
        return Err(shape_err("binary_cross_entropy", format!("{} predictions, {} labels", p.len(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&v| v != F::ZERO && v != F::ONE) {
        return Err(Error::InvalidLabel(bad.to_f64()));
    }
    Ok(())
}

/// `-[y ln p + (1 - y) ln(1 - p)]` averaged over the batch; the gradient is
/// with respect to the probabilities.
pub fn binary_cross_entropy<F: Scalar>(p: &Tensor<F>, y: &[F]) -> Result<LossOutput<F>> {
    check_binary(p, y)?;
    let n = F::from_f64(p.len() as f64);
    let mut total = F::ZERO;
    let mut grad = p.clone();
    for (g, (&pi, &yi)) in grad.data_mut().iter_mut().zip(p.data().iter().zip(y)) {
        let pc = clamp(pi);
        total += -(yi * pc.ln() + (F::ONE - yi) * (F::ONE - pc).ln());
        *g = (-(yi / pc) + (F::ONE - yi) / (F::ONE - pc)) / n;
    }
    Ok(LossOutput { loss: total / n, grad })
}

/// Same loss, with the gradient taken through a sigmoid head: `(p - y) / B`
/// with respect to the logits.
pub fn binary_cross_entropy_logit_grad<F: Scalar>(p: &Tensor<F>, y: &[F]) -> Result<LossOutput<F>> {
    check_binary(p, y)?;
    let mut out = binary_cross_entropy(p, y)?;
    let n = F::from_f64(p.len() as f64);
    for (g, (&pi, &yi)) in out.grad.data_mut().iter_mut().zip(p.data().iter().zip(y)) {
        *g = (pi - yi) / n;
    }
    Ok(out)
}

/// `-ln probs[y]` averaged over rows of `probs` (`[C]` or `[B, C]`). The
/// gradient is the fused softmax + loss gradient with respect to the logits,
/// `(probs - onehot(y)) / B`.
pub fn sparse_categorical_cross_entropy<F: Scalar>(probs: &Tensor<F>, labels: &[usize]) -> Result<LossOutput<F>> {
    let classes = *probs.shape().last().expect("rank >= 1");
    let rows = probs.len() / classes;
    if rows != labels.len() || probs.rank() > 2 {
        return Err(shape_err(
            "sparse_categorical_cross_entropy",
            format!("probs {:?} for {} labels", probs.shape(), labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::IndexOutOfRange { index: bad, classes });
    }
    let n = F::from_f64(rows as f64);
    let mut total = F::ZERO;
    let mut grad = probs.clone();
    for (row, &y) in grad.data_mut().chunks_mut(classes).zip(labels) {
        total += -clamp(row[y]).ln();
        row[y] -= F::ONE;
        row.iter_mut().for_each(|g| *g = *g / n);
    }
    Ok(LossOutput { loss: total / n, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax;
    use crate::rng::Rng;

    #[test]
    fn perfect_binary_prediction() {
        let out = binary_cross_entropy(&Tensor::vector(vec![1.0f64]), &[1.0]).unwrap();
        assert!(out.loss < 1e-6);
        assert!(out.loss >= 0.0);
    }

    #[test]
    fn half_probability_costs_ln2() {
        for y in [0.0, 1.0] {
            let out = binary_cross_entropy(&Tensor::vector(vec![0.5f64]), &[y]).unwrap();
            assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_rejects_soft_labels() {
        assert!(matches!(
            binary_cross_entropy(&Tensor::vector(vec![0.5f64]), &[0.3]),
            Err(Error::InvalidLabel(_))
        ));
    }

    #[test]
    fn binary_grad_matches_finite_differences() {
        let mut rng = Rng::new(17);
        let p: Vec<f64> = (0..6).map(|_| rng.uniform(0.05, 0.95)).collect();
        let y: Vec<f64> = (0..6).map(|i| (i % 2) as f64).collect();
        let out = binary_cross_entropy(&Tensor::vector(p.clone()), &y).unwrap();
        let h = 1e-6;
        for i in 0..p.len() {
            let eval = |delta: f64| {
                let mut q = p.clone();
                q[i] += delta;
                binary_cross_entropy(&Tensor::vector(q), &y).unwrap().loss
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let analytic = out.grad.data()[i];
            assert!((numeric - analytic).abs() / analytic.abs().max(numeric.abs()) < 1e-6);
        }
    }

    #[test]
    fn one_hot_costs_nothing() {
        let out = sparse_categorical_cross_entropy(&Tensor::vector(vec![0.0f64, 1.0, 0.0]), &[1]).unwrap();
        assert!(out.loss < 1e-6);
    }

    #[test]
    fn uniform_over_eight_costs_ln8() {
        let out = sparse_categorical_cross_entropy(&Tensor::vector(vec![0.125f64; 8]), &[3]).unwrap();
        assert!((out.loss - 8f64.ln()).abs() < 1e-12);
        assert!((out.loss - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn label_out_of_range() {
        assert!(matches!(
            sparse_categorical_cross_entropy(&Tensor::vector(vec![0.5f64, 0.5]), &[2]),
            Err(Error::IndexOutOfRange { index: 2, classes: 2 })
        ));
    }

    #[test]
    fn categorical_grad_is_probs_minus_onehot_and_matches_fd() {
        let logits = vec![0.2f64, -1.0, 0.7, 1.5];
        let probs = softmax(&Tensor::vector(logits.clone()));
        let out = sparse_categorical_cross_entropy(&probs, &[2]).unwrap();
        for (i, &g) in out.grad.data().iter().enumerate() {
            let onehot = if i == 2 { 1.0 } else { 0.0 };
            assert_eq!(g, probs.data()[i] - onehot);
        }
        let h = 1e-6;
        for i in 0..4 {
            let eval = |delta: f64| {
                let mut z = logits.clone();
                z[i] += delta;
                sparse_categorical_cross_entropy(&softmax(&Tensor::vector(z)), &[2]).unwrap().loss
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let analytic = out.grad.data()[i];
            assert!((numeric - analytic).abs() / analytic.abs().max(numeric.abs()) < 1e-6);
        }
    }

    #[test]
    fn batch_gradient_is_averaged() {
        let probs = Tensor::new(&[2, 2], vec![0.5f64, 0.5, 0.5, 0.5]).unwrap();
        let out = sparse_categorical_cross_entropy(&probs, &[0, 1]).unwrap();
        assert_eq!(out.grad.data(), &[-0.25, 0.25, 0.25, -0.25]);
    }
}
