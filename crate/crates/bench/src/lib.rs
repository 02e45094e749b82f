//! Inputs shared by the benchmarks.

use flowsentinel_core::dataset::synth::{generate, SynthConfig};
use flowsentinel_core::dataset::{schema, ClassificationMode, FlowDataset, LabelFamilies, LabelVocabulary};
use flowsentinel_core::{Rng, Tensor};

/// Uniform values in [-1, 1).
pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = Rng::new(seed);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0) as f32).collect()).expect("non-empty shape")
}

/// Synthetic dataset restricted to the canonical top-20 features and scaled to [0, 1].
pub fn fixture(rows: usize, mode: ClassificationMode) -> FlowDataset {
    let records = generate(&SynthConfig {
        rows,
        ..SynthConfig::default()
    })
    .expect("valid synthetic config");
    let vocab = LabelVocabulary::new(mode, &LabelFamilies::default());
    let (ds, _) = FlowDataset::from_records(&records, &schema::default_schema(), &vocab).expect("schema matches");
    let mut ds = ds.select_features(&schema::canonical_top20()).expect("canonical features exist");
    let stats = flowsentinel_core::dataset::fit_normalizer(ds.features(), ds.cols(), Default::default()).expect("rows");
    ds.normalize(&stats).expect("matching columns");
    ds
}
