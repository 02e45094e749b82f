//! Declarative description of the two detector architectures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::ClassificationMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// conv → pool → conv → pool → flatten → dense.
    Cnn,
    /// Stacked LSTM with dropout → dense.
    Lstm,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::Cnn, Architecture::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Cnn => "cnn",
            Architecture::Lstm => "lstm",
        }
    }

    /// Adam step size used when none is configured.
    pub fn default_learning_rate(self) -> f64 {
        match self {
            Architecture::Cnn => 1e-3,
            Architecture::Lstm => 1e-4,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" | "cnn-ids" => Ok(Architecture::Cnn),
            "lstm" | "lstm-ids" => Ok(Architecture::Lstm),
            other => Err(Error::InvalidSpec(format!("unknown architecture `{other}` (expected cnn or lstm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub mode: ClassificationMode,
    pub input_features: usize,
    pub conv_filters: [usize; 2],
    pub kernel_size: usize,
    pub pool_size: usize,
    pub lstm_units: [usize; 2],
    pub dropout_rate: f64,
    pub output_units: usize,
    pub output_activation: OutputActivation,
}

/// Head width for a regime: one sigmoid unit for binary, one softmax unit per class otherwise.
pub fn head_for(mode: ClassificationMode) -> (usize, OutputActivation) {
    match mode {
        ClassificationMode::Binary => (1, OutputActivation::Sigmoid),
        m => (m.class_count(), OutputActivation::Softmax),
    }
}

impl ModelSpec {
    pub fn new(architecture: Architecture, mode: ClassificationMode) -> Self {
        let (output_units, output_activation) = head_for(mode);
        Self {
            architecture,
            mode,
            input_features: 20,
            conv_filters: [32, 64],
            kernel_size: 3,
            pool_size: 2,
            lstm_units: [64, 64],
            dropout_rate: 0.2,
            output_units,
            output_activation,
        }
    }

    pub fn with_input_features(mut self, n: usize) -> Self {
        self.input_features = n;
        self
    }

    /// Signal lengths through the convolutional stack:
    /// `[input, conv1, pool1, conv2, pool2]`.
    pub fn cnn_lengths(&self) -> Result<[usize; 5]> {
        let (k, p) = (self.kernel_size, self.pool_size);
        if k == 0 || p == 0 {
            return Err(Error::InvalidSpec("kernel and pool sizes must be positive".into()));
        }
        let mut lens = [self.input_features, 0, 0, 0, 0];
        for stage in 0..2 {
            let conv_in = lens[2 * stage];
            if conv_in < k {
                return Err(Error::InvalidSpec(format!(
                    "signal of length {conv_in} is shorter than kernel {k}"
                )));
            }
            let conv_out = conv_in - k + 1;
            if conv_out < p {
                return Err(Error::InvalidSpec(format!(
                    "signal of length {conv_out} is shorter than pool {p}"
                )));
            }
            lens[2 * stage + 1] = conv_out;
            lens[2 * stage + 2] = conv_out / p;
        }
        Ok(lens)
    }

    /// Width of the flattened convolutional features.
    pub fn cnn_flat_width(&self) -> Result<usize> {
        Ok(self.cnn_lengths()?[4] * self.conv_filters[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_features == 0 {
            return Err(Error::InvalidSpec("input_features must be positive".into()));
        }
        if (self.output_units, self.output_activation) != head_for(self.mode) {
            return Err(Error::InvalidSpec(format!(
                "{} regime needs {:?}, spec has {} {:?} units",
                self.mode,
                head_for(self.mode),
                self.output_units,
                self.output_activation
            )));
        }
        match self.architecture {
            Architecture::Cnn => {
                if self.conv_filters.contains(&0) {
                    return Err(Error::InvalidSpec("conv_filters must be positive".into()));
                }
                self.cnn_lengths()?;
            }
            Architecture::Lstm => {
                if self.lstm_units.contains(&0) {
                    return Err(Error::InvalidSpec("lstm_units must be positive".into()));
                }
                if !(0.0..1.0).contains(&self.dropout_rate) {
                    return Err(Error::InvalidSpec(format!("dropout_rate {} outside [0, 1)", self.dropout_rate)));
                }
            }
        }
        Ok(())
    }

    /// Trainable scalars implied by the layer sizes.
    pub fn parameter_count(&self) -> Result<usize> {
        self.validate()?;
        let out = self.output_units;
        Ok(match self.architecture {
            Architecture::Cnn => {
                let [f1, f2] = self.conv_filters;
                let k = self.kernel_size;
                (f1 * k + f1) + (f2 * f1 * k + f2) + (self.cnn_flat_width()? + 1) * out
            }
            Architecture::Lstm => {
                let [h1, h2] = self.lstm_units;
                4 * h1 * (1 + h1 + 1) + 4 * h2 * (h1 + h2 + 1) + (h2 + 1) * out
            }
        })
    }
}
