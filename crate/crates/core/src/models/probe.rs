//! Whole-network gradient check target.

use super::network::Model;
use crate::error::Result;
use crate::nn::gradcheck::GradCheck;
use crate::tensor::Parameter;

/// Mean head loss of a 64-bit model over fixed rows, differentiated with
/// respect to every parameter. Dropout stays inert.
pub struct NetworkProbe {
    pub model: Model<f64>,
    pub rows: Vec<f64>,
    pub labels: Vec<usize>,
}

impl GradCheck for NetworkProbe {
    fn num_params(&self) -> usize {
        self.model.params().len()
    }

    fn param_mut(&mut self, index: usize) -> &mut Parameter<f64> {
        self.model.params_mut().into_iter().nth(index).expect("parameter index in range")
    }

    fn loss(&mut self) -> Result<f64> {
        self.model.loss(&self.rows, &self.labels)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.model.zero_grad();
        let n = self.model.spec.input_features;
        let b = self.labels.len();
        let mut total = 0.0;
        for (row, &y) in self.rows.chunks(n).zip(&self.labels) {
            total += self.model.train_sample(row, y, b, None)?.loss;
        }
        Ok(total / b as f64)
    }
}
