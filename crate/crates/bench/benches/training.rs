use criterion::{criterion_group, criterion_main, Criterion};
use flowsentinel_bench::fixture;
use flowsentinel_core::dataset::ClassificationMode;
use flowsentinel_core::models::{build, Architecture, Model, ModelSpec};
use flowsentinel_core::training::{train, TrainConfig};
use std::hint::black_box;

fn one_epoch(c: &mut Criterion) {
    let ds = fixture(1000, ClassificationMode::Multi);
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train one epoch, 1000 rows");
    group.sample_size(10);
    for arch in Architecture::ALL {
        let model: Model = build(&ModelSpec::new(arch, ClassificationMode::Multi), 0).unwrap();
        group.bench_function(arch.as_str(), |b| b.iter(|| train(black_box(model.clone()), &ds, &cfg).unwrap()));
    }
    group.finish();
}

fn inference(c: &mut Criterion) {
    let ds = fixture(1000, ClassificationMode::Binary);
    for arch in Architecture::ALL {
        let model: Model = build(&ModelSpec::new(arch, ClassificationMode::Binary), 0).unwrap();
        c.bench_function(&format!("{arch} inference, 1000 rows"), |b| {
            b.iter(|| model.probabilities_rows(black_box(ds.features())).unwrap())
        });
    }
}

criterion_group!(benches, one_epoch, inference);
criterion_main!(benches);
