use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowsentinel_core::dataset::{cache, load_csv, schema, FlowDataset, LabelFamilies, LabelVocabulary};
use flowsentinel_core::models;
use flowsentinel_core::training::{predict_dataset, scale_for_model};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_flowsentinel"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Writes a synthetic CSV under `dir/raw/` and returns the directory.
fn fixture(dir: &Path, rows: usize, malformed: usize) -> PathBuf {
    let raw = dir.join("raw");
    let (r, m) = (rows.to_string(), malformed.to_string());
    ok(dir, &["synth", "--rows", &r, "--malformed", &m, "--output", "raw/flows.csv"]);
    raw
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.display().to_string()
}

#[test]
fn ingest_of_empty_directory_exits_2() {
    let t = TempDir::new().unwrap();
    std::fs::create_dir(t.path().join("empty")).unwrap();
    let out = run(t.path(), &["ingest", "empty"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no input files"));
    let out = run(t.path(), &["ingest"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn ingest_drops_malformed_rows_and_is_deterministic() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 100, 5);
    ok(t.path(), &["ingest", "raw", "--out", "a"]);
    ok(t.path(), &["ingest", "raw", "--out", "b"]);
    let ds = cache::read_cache(&t.path().join("a/dataset.fsds")).unwrap();
    assert_eq!(ds.rows(), 95);
    let report: serde_json::Value = serde_json::from_str(&read(t.path().join("a/ingest_report.json"))).unwrap();
    let drops = &report["rows_dropped"];
    let total: u64 = ["malformed_row", "unparseable", "non_finite", "empty_label", "unknown_label"]
        .iter()
        .map(|k| drops[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 5);
    assert_eq!(
        std::fs::read(t.path().join("a/dataset.fsds")).unwrap(),
        std::fs::read(t.path().join("b/dataset.fsds")).unwrap()
    );
}

#[test]
fn ingest_names_missing_column() {
    let t = TempDir::new().unwrap();
    std::fs::write(t.path().join("bad.csv"), "flow_duration,label\n1,BenignTraffic\n").unwrap();
    let out = run(t.path(), &["ingest", "bad.csv"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("Header_Length"), "{}", stderr(&out));
}

#[test]
fn select_defaults_to_canonical_list() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 600, 0);
    ok(t.path(), &["ingest", "raw", "--mode", "multi"]);
    let cfg = write_config(t.path(), r#"{"forest": {"n_trees": 5}}"#);
    ok(t.path(), &["select", "--config", &cfg]);
    let list = read(t.path().join("out/features.txt"));
    assert_eq!(list.lines().collect::<Vec<_>>(), schema::canonical_top20());
    let importance = read(t.path().join("out/importance.csv"));
    assert_eq!(importance.lines().next(), Some("feature,importance"));
    assert_eq!(importance.lines().count(), 47);

    ok(t.path(), &["select", "--config", &cfg, "--top-k", "5"]);
    assert_eq!(read(t.path().join("out/features.txt")).lines().count(), 5);
}

#[test]
fn recomputed_selection_is_deterministic() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 600, 0);
    ok(t.path(), &["ingest", "raw", "--mode", "grouped"]);
    let cfg = write_config(t.path(), r#"{"forest": {"n_trees": 8}}"#);
    let mut outputs = Vec::new();
    for _ in 0..2 {
        ok(t.path(), &["select", "--config", &cfg, "--recompute-importance", "--top-k", "10"]);
        outputs.push((read(t.path().join("out/features.txt")), read(t.path().join("out/importance.csv"))));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].0.lines().count(), 10);
}

#[test]
fn train_emits_artifacts_and_evaluate_scores_them() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 5000, 0);
    ok(t.path(), &["ingest", "raw", "--mode", "binary"]);
    ok(t.path(), &["train", "--arch", "cnn", "--mode", "binary"]);
    for artifact in ["model.fsnn", "history.csv", "manifest.json"] {
        assert!(t.path().join("out").join(artifact).is_file(), "{artifact} missing");
    }
    assert_eq!(read(t.path().join("out/history.csv")).lines().count(), 21);

    ok(t.path(), &["evaluate"]);
    let metrics = read(t.path().join("out/metrics.json"));
    let v: serde_json::Value = serde_json::from_str(&metrics).unwrap();
    let acc = v["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    ok(t.path(), &["evaluate"]);
    assert_eq!(read(t.path().join("out/metrics.json")), metrics);

    let manifest: serde_json::Value = serde_json::from_str(&read(t.path().join("out/manifest.json"))).unwrap();
    assert_eq!(manifest["metrics"]["accuracy"].as_f64().unwrap(), acc);

    // A multi-class cache of the same rows cannot be scored by a binary model.
    ok(t.path(), &["ingest", "raw", "--mode", "multi", "--cache", "multi.fsds"]);
    let out = run(t.path(), &["evaluate", "--cache", "multi.fsds"]);
    assert_eq!(code(&out), 5);
    let msg = stderr(&out);
    assert!(msg.contains("binary") && msg.contains("multi"), "{msg}");
}

#[test]
fn training_is_reproducible_and_replayable() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 800, 0);
    ok(t.path(), &["ingest", "raw", "--mode", "grouped"]);
    let args = ["train", "--arch", "lstm", "--epochs", "2", "--batch-size", "64", "--seed", "5", "--cache", "out/dataset.fsds"];
    ok(t.path(), &[&args[..], &["--out", "a"]].concat());
    ok(t.path(), &[&args[..], &["--out", "b"]].concat());
    let a = std::fs::read(t.path().join("a/model.fsnn")).unwrap();
    assert_eq!(a, std::fs::read(t.path().join("b/model.fsnn")).unwrap());

    ok(t.path(), &["train", "--config", "a/manifest.json", "--out", "replay"]);
    let m = |dir: &str| -> serde_json::Value { serde_json::from_str(&read(t.path().join(dir).join("manifest.json"))).unwrap() };
    assert_eq!(m("a")["metrics"], m("replay")["metrics"]);
    assert_eq!(a, std::fs::read(t.path().join("replay/model.fsnn")).unwrap());
}

#[test]
fn config_errors_exit_1() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&run(t.path(), &["train", "--epochs", "0"])), 1);
    assert_eq!(code(&run(t.path(), &["train", "--mode", "sideways"])), 1);
    let cfg = write_config(t.path(), r#"{"not_a_field": 1}"#);
    assert_eq!(code(&run(t.path(), &["train", "--config", &cfg])), 1);
    let out = bin().current_dir(t.path()).env("FLOWSENTINEL_THREADS", "zero").args(["select"]).output().unwrap();
    assert_eq!(code(&out), 1);
    assert_eq!(code(&run(t.path(), &["select"])), 2);
}

#[test]
fn predict_matches_internal_predictions() {
    let t = TempDir::new().unwrap();
    let raw = fixture(t.path(), 1000, 0);
    ok(t.path(), &["ingest", "raw", "--mode", "grouped"]);
    ok(t.path(), &["train", "--epochs", "2", "--batch-size", "32"]);
    ok(t.path(), &["predict", "--input", "raw/flows.csv"]);
    let predicted: Vec<String> = read(t.path().join("out/predictions.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();

    let model = models::load(&t.path().join("out/model.fsnn")).unwrap();
    let (records, _) = load_csv(&[raw.join("flows.csv")], &schema::default_schema(), "label").unwrap();
    let vocab = LabelVocabulary::new(model.spec.mode, &LabelFamilies::default());
    let (ds, _) = FlowDataset::from_records(&records, &schema::default_schema(), &vocab).unwrap();
    let mut ds = ds.select_features(&model.meta.feature_names).unwrap();
    scale_for_model(&model, &mut ds).unwrap();
    let internal: Vec<String> = predict_dataset(&model, &ds)
        .unwrap()
        .into_iter()
        .map(|c| model.meta.class_names[c].clone())
        .collect();
    assert_eq!(predicted, internal);
}

#[test]
fn predict_shapes_and_missing_columns() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 400, 0);
    ok(t.path(), &["ingest", "raw"]);
    ok(t.path(), &["train", "--epochs", "1"]);
    let csv = read(t.path().join("raw/flows.csv"));
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    let first = lines.next().unwrap();
    std::fs::write(t.path().join("one.csv"), format!("{header}\n{first}\n")).unwrap();
    ok(t.path(), &["predict", "--input", "one.csv", "--output", "one_pred.csv"]);
    let pred = read(t.path().join("one_pred.csv"));
    assert_eq!(pred.lines().count(), 2);
    assert_eq!(pred.lines().next(), Some("row_id,predicted_class,confidence"));

    let header_no_srate = header.replace("Srate", "NotSrate");
    std::fs::write(t.path().join("no_srate.csv"), format!("{header_no_srate}\n{first}\n")).unwrap();
    let out = run(t.path(), &["predict", "--input", "no_srate.csv"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("Srate"));
}

#[test]
fn inspect_reports_models_and_caches() {
    let t = TempDir::new().unwrap();
    fixture(t.path(), 400, 0);
    ok(t.path(), &["ingest", "raw", "--mode", "multi"]);
    ok(t.path(), &["train", "--epochs", "1", "--arch", "lstm"]);
    let out = ok(t.path(), &["inspect", "out/model.fsnn"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["spec"]["architecture"], "lstm");
    assert_eq!(v["spec"]["output_units"], 34);
    let out = ok(t.path(), &["inspect", "out/dataset.fsds"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"], 400);

    let mut bytes = std::fs::read(t.path().join("out/model.fsnn")).unwrap();
    bytes.truncate(bytes.len() - 10);
    std::fs::write(t.path().join("broken.fsnn"), bytes).unwrap();
    assert_eq!(code(&run(t.path(), &["inspect", "broken.fsnn"])), 3);
    assert_eq!(code(&run(t.path(), &["evaluate", "--model", "broken.fsnn"])), 3);
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["ciciot2023.json", "fixture.json"] {
        let path = root.join(name);
        flowsentinel_cli::config::RunConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
