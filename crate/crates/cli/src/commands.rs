//! One function per subcommand.

use std::io::Write;
use std::path::{Path, PathBuf};

use flowsentinel_core::dataset::synth::{self, SynthConfig};
use flowsentinel_core::dataset::{
    cache, collect_csv_paths, ingest, schema, ClassificationMode, FlowDataset, IngestOptions, LabelFamilies, LabelPolicy,
};
use flowsentinel_core::features::{rank_features, select_top_k};
use flowsentinel_core::models::{self, predict_with_confidence, Model};
use flowsentinel_core::rng::derive_seed;
use flowsentinel_core::training::{
    evaluate_dataset, export_history, prepare_evaluation, run_experiment_with, ExperimentSetup, MetricsReport,
};
use flowsentinel_core::Error;
use log::{info, warn};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, RowCounts, RunManifest, Seeds};

fn ensure_out(cfg: &RunConfig) -> CliResult<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out.display())))
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Core(Error::FileNotFound(path.to_path_buf())),
        _ => CliError::Core(Error::Io(e)),
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Core(Error::Io(e)))
}

fn load_cache(cfg: &RunConfig) -> CliResult<(FlowDataset, Vec<u8>)> {
    let path = cfg.cache_path();
    let bytes = read_bytes(&path)?;
    Ok((cache::from_bytes(&bytes)?, bytes))
}

pub fn ingest_cmd(cfg: &RunConfig) -> CliResult<()> {
    if cfg.inputs.is_empty() {
        return Err(CliError::MissingInput("no input files".into()));
    }
    let paths = collect_csv_paths(&cfg.inputs)?;
    let opts = IngestOptions {
        mode: cfg.mode.unwrap_or(ClassificationMode::Binary),
        label_column: cfg.label_column.clone(),
        policy: if cfg.strict_labels { LabelPolicy::Strict } else { LabelPolicy::Lenient },
        subsample_fraction: cfg.subsample,
        seed: cfg.seed,
        ..IngestOptions::default()
    };
    let (ds, report) = ingest(&paths, &opts)?;
    ensure_out(cfg)?;
    let cache_path = cfg.cache_path();
    cache::write_cache(&ds, &cache_path)?;
    write_text(&cfg.out.join("ingest_report.json"), &(report.to_json()? + "\n"))?;
    println!(
        "ingested {} rows from {} file(s): {} dropped, {} subsampled out, {} retained -> {}",
        report.rows_read,
        report.files.len(),
        report.rows_dropped.total(),
        report.rows_subsampled_out,
        report.rows_retained,
        cache_path.display()
    );
    Ok(())
}

pub fn select_cmd(cfg: &RunConfig) -> CliResult<()> {
    let (ds, _) = load_cache(cfg)?;
    let families = LabelFamilies::default();
    let report = rank_features(&ds, &families, &cfg.forest)?;
    let chosen = if cfg.recompute_importance {
        select_top_k(&report, cfg.top_k)?
    } else {
        let canonical = schema::canonical_top20();
        if cfg.top_k > canonical.len() {
            return Err(Error::KTooLarge {
                k: cfg.top_k,
                available: canonical.len(),
            }
            .into());
        }
        canonical[..cfg.top_k].to_vec()
    };
    ds.select_features(&chosen)?;
    ensure_out(cfg)?;
    let list: String = chosen.iter().map(|f| format!("{f}\n")).collect();
    write_text(&cfg.features_path(), &list)?;
    report.write_csv(&cfg.out.join("importance.csv"))?;
    if report.degenerate {
        warn!("forest made no splits; all importances are zero");
    }
    println!(
        "selected {} features ({}) -> {}",
        chosen.len(),
        if cfg.recompute_importance { "recomputed" } else { "canonical" },
        cfg.features_path().display()
    );
    Ok(())
}

fn resolve_features(cfg: &RunConfig) -> CliResult<Vec<String>> {
    if let Some(list) = &cfg.features {
        return Ok(list.clone());
    }
    let path = cfg.features_path();
    if path.is_file() {
        let text = std::fs::read_to_string(&path).map_err(Error::from)?;
        let list = schema::parse_feature_list(&text);
        if list.is_empty() {
            return Err(CliError::Config(format!("{} lists no features", path.display())));
        }
        return Ok(list);
    }
    let canonical = schema::canonical_top20();
    if cfg.top_k > canonical.len() {
        return Err(Error::KTooLarge {
            k: cfg.top_k,
            available: canonical.len(),
        }
        .into());
    }
    Ok(canonical[..cfg.top_k].to_vec())
}

pub fn train_cmd(cfg: &RunConfig, replay_hash: Option<&str>) -> CliResult<()> {
    let (ds, bytes) = load_cache(cfg)?;
    let dataset_sha256 = sha256_hex(&bytes);
    if let Some(expected) = replay_hash {
        if expected != dataset_sha256 {
            warn!("dataset cache differs from the manifest's ({expected}); results will not match");
        }
    }
    if let Some(mode) = cfg.mode {
        if mode != ds.mode {
            return Err(Error::ModeMismatch {
                model: mode.to_string(),
                data: ds.mode.to_string(),
            }
            .into());
        }
    }
    let features = resolve_features(cfg)?;
    let setup = ExperimentSetup {
        architecture: cfg.arch,
        features: features.clone(),
        split_fraction: cfg.split_fraction,
        split_seed: cfg.seed,
        normalization: cfg.normalization,
        train: cfg.train.clone(),
    };
    info!(
        "training {} on {} rows ({} regime, {} features)",
        cfg.arch,
        ds.rows(),
        ds.mode,
        features.len()
    );
    let exp = run_experiment_with(&ds, &setup, |r| {
        info!(
            "epoch {:>3}: loss {:.4} acc {:.4} | val loss {:.4} acc {:.4} ({:.1}s)",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.seconds
        )
    })?;
    ensure_out(cfg)?;
    let model_path = cfg.model_path();
    let model_bytes = models::io::to_bytes(&exp.model)?;
    write_text_bytes(&model_path, &model_bytes)?;
    export_history(&exp.history, &cfg.out.join("history.csv"))?;

    let mut resolved = cfg.clone();
    resolved.mode = Some(ds.mode);
    resolved.features = Some(features.clone());
    // Inputs are pinned; outputs follow `--out` on replay.
    resolved.cache = Some(cfg.cache_path());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "train".into(),
        config: resolved,
        seeds: Seeds {
            run: cfg.seed,
            split: cfg.seed,
            model_init: derive_seed(cfg.seed, 0),
            training: cfg.train.seed,
        },
        dataset_sha256,
        row_counts: RowCounts {
            cache: ds.rows(),
            train: exp.split.train.len(),
            test: exp.split.test.len(),
        },
        features,
        metrics: exp.metrics.clone(),
        final_epoch: exp.history.last().cloned(),
        model_sha256: sha256_hex(&model_bytes),
    };
    manifest.write(&cfg.out.join("manifest.json"))?;
    println!(
        "trained {} ({}): test accuracy {:.4}, macro F1 {:.4} -> {}",
        cfg.arch,
        ds.mode,
        exp.metrics.accuracy,
        exp.metrics.macro_avg.f1,
        model_path.display()
    );
    Ok(())
}

fn write_text_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Core(Error::Io(e)))
}

pub fn evaluate_cmd(cfg: &RunConfig) -> CliResult<MetricsReport> {
    let model = models::load(&cfg.model_path())?;
    let (ds, _) = load_cache(cfg)?;
    let test = prepare_evaluation(&model, &ds)?;
    let report = evaluate_dataset(&model, &test)?;
    ensure_out(cfg)?;
    write_text(&cfg.out.join("metrics.json"), &(report.to_json()? + "\n"))?;
    let table = report.to_table();
    write_text(&cfg.out.join("metrics.txt"), &table)?;
    print!("{table}");
    Ok(report)
}

/// Reads the model's feature columns from a CSV, scaled as in training.
fn read_prediction_rows(model: &Model, path: &Path) -> CliResult<Vec<f32>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()).into());
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let cols: Vec<usize> = model
        .meta
        .feature_names
        .iter()
        .map(|name| {
            header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
                column: name.clone(),
                file: Some(path.to_path_buf()),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (&c, name) in cols.iter().zip(&model.meta.feature_names) {
            let raw = record.get(c).unwrap_or("");
            match raw.parse::<f32>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(CliError::Schema(format!(
                        "row {i}: column `{name}` has non-numeric or non-finite value `{raw}`"
                    )))
                }
            }
        }
    }
    if let Some(n) = &model.meta.normalizer {
        n.apply(&mut values);
    }
    Ok(values)
}

pub fn predict_cmd(cfg: &RunConfig, input: &Path, output: Option<&Path>) -> CliResult<PathBuf> {
    let model = models::load(&cfg.model_path())?;
    let rows = read_prediction_rows(&model, input)?;
    let probs = model.probabilities_rows(&rows)?;
    let out_path = output.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join("predictions.csv"));
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(Error::from)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(&out_path).map_err(Error::from)?);
    let io = |e: std::io::Error| CliError::Core(Error::Io(e));
    writeln!(out, "row_id,predicted_class,confidence").map_err(io)?;
    for (i, p) in probs.chunks(model.spec.output_units).enumerate() {
        let (class, conf) = predict_with_confidence(p);
        let name = model.meta.class_names.get(class).cloned().unwrap_or_else(|| class.to_string());
        writeln!(out, "{i},{name},{conf:.6}").map_err(io)?;
    }
    out.flush().map_err(io)?;
    println!(
        "wrote {} predictions -> {}",
        probs.len() / model.spec.output_units,
        out_path.display()
    );
    Ok(out_path)
}

pub fn inspect_cmd(path: &Path) -> CliResult<serde_json::Value> {
    let bytes = read_bytes(path)?;
    let value = match bytes.get(..4) {
        Some(b"FSNN") => {
            let m = models::io::from_bytes(&bytes)?;
            let params: Vec<_> = m
                .params()
                .iter()
                .map(|p| json!({"name": p.name, "shape": p.shape()}))
                .collect();
            json!({
                "kind": "model",
                "spec": m.spec,
                "init_seed": m.init_seed,
                "parameter_count": m.parameter_count(),
                "features": m.meta.feature_names,
                "classes": m.meta.class_names,
                "split": m.meta.split,
                "normalization": m.meta.normalizer.as_ref().map(|n| n.scheme),
                "parameters": params,
                "sha256": sha256_hex(&bytes),
            })
        }
        Some(b"FSDS") => {
            let ds = cache::from_bytes(&bytes)?;
            let histogram: serde_json::Map<String, serde_json::Value> = ds
                .classes
                .iter()
                .zip(ds.class_histogram())
                .map(|(c, n)| (c.clone(), json!(n)))
                .collect();
            json!({
                "kind": "dataset",
                "mode": ds.mode,
                "rows": ds.rows(),
                "columns": ds.cols(),
                "features": ds.feature_names,
                "class_histogram": histogram,
                "sha256": sha256_hex(&bytes),
            })
        }
        _ => return Err(CliError::Schema(format!("{} is neither a model nor a dataset cache", path.display()))),
    };
    let text = serde_json::to_string_pretty(&value).map_err(Error::from)?;
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(value)
}

pub fn synth_cmd(cfg: &RunConfig, rows: usize, malformed: usize, output: &Path) -> CliResult<()> {
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(Error::from)?;
    }
    let synth_cfg = SynthConfig {
        rows,
        seed: cfg.seed,
        malformed,
        // Small fixtures lower the per-class floor so every class still fits.
        min_per_class: SynthConfig::default().min_per_class.min(rows / synth::LABEL_SKEW.len()).max(1),
        ..SynthConfig::default()
    };
    let kept = synth::write_csv(&synth_cfg, output)?;
    println!(
        "wrote {rows} rows ({} well-formed, {malformed} malformed) -> {}",
        kept.len(),
        output.display()
    );
    Ok(())
}
