//! The CNN and LSTM detectors: specification, construction, inference and
//! persistence.

pub mod io;
pub mod network;
pub mod probe;
pub mod spec;

pub use io::{load, save};
pub use network::{build, predict_from_probs, predict_with_confidence, Model, ModelMeta, SampleStep, SplitInfo};
pub use probe::NetworkProbe;
pub use spec::{head_for, Architecture, ModelSpec, OutputActivation};
