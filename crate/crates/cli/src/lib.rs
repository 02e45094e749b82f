//! `flowsentinel` command-line pipeline: ingest → select → train → evaluate,
//! plus predict, inspect and a synthetic data generator.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use flowsentinel_core::dataset::ClassificationMode;
use flowsentinel_core::models::Architecture;

pub use config::{Overrides, RunConfig};
pub use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "flowsentinel", version, about = "Train and apply CNN/LSTM intrusion detectors on network-flow CSVs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// JSON run config, or a manifest written by `train` to replay it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Label regime: binary, grouped or multi.
    #[arg(long, global = true)]
    pub mode: Option<ClassificationMode>,
    /// Detector architecture: cnn or lstm.
    #[arg(long, global = true)]
    pub arch: Option<Architecture>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Rank features with the random forest instead of using the canonical list.
    #[arg(long, global = true)]
    pub recompute_importance: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Per-class fraction of rows kept at ingest.
    #[arg(long, global = true)]
    pub subsample: Option<f64>,
    /// Dataset cache path (default `<out>/dataset.fsds`).
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Model file path (default `<out>/model.fsnn`).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean CSV files into a binary dataset cache.
    Ingest {
        /// CSV files or directories of CSV files.
        inputs: Vec<PathBuf>,
    },
    /// Rank features and write the list the model will use.
    Select,
    /// Train a detector on the cache and score it on the held-out split.
    Train,
    /// Re-score a trained model on its held-out split.
    Evaluate,
    /// Classify rows of a CSV file.
    Predict {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<out>/predictions.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Describe a model file or dataset cache as JSON.
    Inspect { path: PathBuf },
    /// Write a seeded synthetic CSV shaped like CICIoT2023.
    Synth {
        #[arg(long, default_value_t = 5000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        malformed: usize,
        #[arg(long)]
        output: PathBuf,
    },
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            cache: self.cache.clone(),
            model: self.model.clone(),
            mode: self.mode,
            arch: self.arch,
            seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            top_k: self.top_k,
            recompute_importance: self.recompute_importance,
            subsample: self.subsample,
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FLOWSENTINEL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FLOWSENTINEL_THREADS must be a positive integer, got `{raw}`")))?;
    // Fails only if a pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let mut replay_hash = None;
    let mut cfg = match &cli.flags.config {
        Some(path) => {
            if let Ok(m) = manifest::RunManifest::read(path) {
                replay_hash = Some(m.dataset_sha256);
            }
            RunConfig::load(path)?
        }
        None => RunConfig::default(),
    };
    cfg.apply(&cli.flags.overrides());
    cfg.validate()?;
    match cli.command {
        Command::Ingest { inputs } => {
            if !inputs.is_empty() {
                cfg.inputs = inputs;
            }
            commands::ingest_cmd(&cfg)
        }
        Command::Select => commands::select_cmd(&cfg),
        Command::Train => commands::train_cmd(&cfg, replay_hash.as_deref()),
        Command::Evaluate => commands::evaluate_cmd(&cfg).map(|_| ()),
        Command::Predict { input, output } => commands::predict_cmd(&cfg, &input, output.as_deref()).map(|_| ()),
        Command::Inspect { path } => commands::inspect_cmd(&path).map(|_| ()),
        Command::Synth { rows, malformed, output } => commands::synth_cmd(&cfg, rows, malformed, &output),
    }
}
