//! Flow-based intrusion detection: neural-network primitives, dataset
//! handling, feature ranking, CNN and LSTM classifiers, and training.

mod binio;
pub mod dataset;
pub mod error;
pub mod features;
pub mod models;
pub mod nn;
pub mod rng;
pub mod tensor;
pub mod training;

pub use dataset::{ClassificationMode, FlowDataset, FlowRecord};
pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Parameter, Scalar, Tensor};
