//! Flow-record ingestion, label regimes, sampling, splitting and scaling.

pub mod cache;
pub mod ingest;
pub mod labels;
pub mod normalize;
pub mod schema;
pub mod split;
pub mod synth;

use std::collections::BTreeMap;
use std::path::PathBuf;

pub use cache::{read_cache, write_cache};
pub use ingest::{collect_csv_paths, load_csv, DropCounts, IngestReport};
pub use labels::{build_vocabulary, ClassificationMode, LabelFamilies, LabelPolicy, LabelVocabulary};
pub use normalize::{apply_normalizer, fit_normalizer, NormScheme, Normalizer};
pub use split::{stratified_split, subsample, SplitIndices};

use crate::error::{Error, Result};

/// One cleaned CSV row. `features` follows the ingest schema's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub features: Vec<f32>,
    pub label: String,
}

/// Feature matrix and class labels under one classification regime.
///
/// The raw dataset label of every row is kept alongside the regime's class
/// index so other regimes can be derived later (feature ranking uses the
/// multi-class index as its regression target).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    pub mode: ClassificationMode,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    features: Vec<f32>,
    labels: Vec<u16>,
    raw_names: Vec<String>,
    raw_ids: Vec<u16>,
}

impl FlowDataset {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        mode: ClassificationMode,
        feature_names: Vec<String>,
        classes: Vec<String>,
        features: Vec<f32>,
        labels: Vec<u16>,
        raw_names: Vec<String>,
        raw_ids: Vec<u16>,
    ) -> std::result::Result<Self, String> {
        let cols = feature_names.len();
        if cols == 0 && !labels.is_empty() {
            return Err("rows without feature columns".into());
        }
        if features.len() != labels.len() * cols || raw_ids.len() != labels.len() {
            return Err(format!(
                "{} values / {} raw labels for {} rows x {cols} columns",
                features.len(),
                raw_ids.len(),
                labels.len()
            ));
        }
        if labels.iter().any(|&c| c as usize >= classes.len()) {
            return Err("class index out of range".into());
        }
        if raw_ids.iter().any(|&r| r as usize >= raw_names.len()) {
            return Err("raw label index out of range".into());
        }
        Ok(Self {
            mode,
            feature_names,
            classes,
            features,
            labels,
            raw_names,
            raw_ids,
        })
    }

    /// Encodes records under `vocab`; rows it cannot place are dropped and
    /// their count returned.
    pub fn from_records(records: &[FlowRecord], feature_names: &[String], vocab: &LabelVocabulary) -> Result<(Self, u64)> {
        let cols = feature_names.len();
        let mut raw_index: BTreeMap<&str, u16> = BTreeMap::new();
        for r in records {
            raw_index.entry(r.label.as_str()).or_insert(0);
        }
        if raw_index.len() > u16::MAX as usize {
            return Err(Error::InvalidConfig("more than 65535 distinct raw labels".into()));
        }
        for (i, v) in raw_index.values_mut().enumerate() {
            *v = i as u16;
        }
        let mut features = Vec::with_capacity(records.len() * cols);
        let mut labels = Vec::with_capacity(records.len());
        let mut raw_ids = Vec::with_capacity(records.len());
        let mut dropped = 0;
        for r in records {
            if r.features.len() != cols {
                return Err(crate::error::shape_err(
                    "flow dataset",
                    format!("record has {} features, schema {cols}", r.features.len()),
                ));
            }
            match vocab.encode(&r.label) {
                Some(c) => {
                    features.extend_from_slice(&r.features);
                    labels.push(c);
                    raw_ids.push(raw_index[r.label.as_str()]);
                }
                None => dropped += 1,
            }
        }
        let raw_names = raw_index.keys().map(|s| s.to_string()).collect();
        let ds = Self::from_parts(
            vocab.mode,
            feature_names.to_vec(),
            vocab.classes.clone(),
            features,
            labels,
            raw_names,
            raw_ids,
        )
        .map_err(Error::InvalidConfig)?;
        Ok((ds, dropped))
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let c = self.cols();
        &self.features[i * c..(i + 1) * c]
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn raw_label(&self, i: usize) -> &str {
        &self.raw_names[self.raw_ids[i] as usize]
    }

    pub(crate) fn raw_parts(&self) -> (&[String], &[u16]) {
        (&self.raw_names, &self.raw_ids)
    }

    pub fn class_histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.classes.len()];
        for &c in &self.labels {
            h[c as usize] += 1;
        }
        h
    }

    /// Keeps only `names`, in that order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names.iter().position(|f| f == n).ok_or_else(|| Error::MissingColumn {
                    column: n.clone(),
                    file: None,
                })
            })
            .collect::<Result<_>>()?;
        let mut features = Vec::with_capacity(self.rows() * idx.len());
        for i in 0..self.rows() {
            let row = self.row(i);
            features.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(Self {
            feature_names: names.to_vec(),
            features,
            ..self.clone()
        })
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.cols());
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            mode: self.mode,
            feature_names: self.feature_names.clone(),
            classes: self.classes.clone(),
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            raw_names: self.raw_names.clone(),
            raw_ids: indices.iter().map(|&i| self.raw_ids[i]).collect(),
        }
    }

    pub fn split(&self, fraction: f64, seed: u64) -> Result<SplitIndices> {
        split::stratified_split_named(&self.labels, fraction, seed, |c| self.classes[c].clone())
    }

    pub fn normalize(&mut self, stats: &Normalizer) -> Result<()> {
        if stats.cols() != self.cols() {
            return Err(crate::error::shape_err(
                "normalize",
                format!("{} statistics for {} columns", stats.cols(), self.cols()),
            ));
        }
        stats.apply(&mut self.features);
        Ok(())
    }

    /// Multi-class index of every row's raw label (`None` when the raw label
    /// is outside the multi-class vocabulary).
    pub fn multi_class_targets(&self, families: &LabelFamilies) -> Vec<Option<u16>> {
        let vocab = LabelVocabulary::new(ClassificationMode::Multi, families);
        let per_raw: Vec<Option<u16>> = self.raw_names.iter().map(|r| vocab.encode(r)).collect();
        self.raw_ids.iter().map(|&r| per_raw[r as usize]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub mode: ClassificationMode,
    pub schema: Vec<String>,
    pub label_column: String,
    pub families: LabelFamilies,
    pub policy: LabelPolicy,
    pub subsample_fraction: f64,
    pub seed: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            mode: ClassificationMode::Binary,
            schema: schema::default_schema(),
            label_column: schema::DEFAULT_LABEL_COLUMN.into(),
            families: LabelFamilies::default(),
            policy: LabelPolicy::Lenient,
            subsample_fraction: 1.0,
            seed: 42,
        }
    }
}

/// Load, clean, encode and subsample CSV files into one dataset.
pub fn ingest(paths: &[PathBuf], opts: &IngestOptions) -> Result<(FlowDataset, IngestReport)> {
    let (records, mut report) = load_csv(paths, &opts.schema, &opts.label_column)?;
    let vocab = build_vocabulary(&records, opts.mode, &opts.families, opts.policy)?;
    let (full, unknown) = FlowDataset::from_records(&records, &opts.schema, &vocab)?;
    drop(records);
    let keep = subsample(full.labels(), opts.subsample_fraction, opts.seed)?;
    let ds = if keep.len() == full.rows() { full } else { full.subset(&keep) };

    report.rows_dropped.unknown_label = unknown;
    report.rows_subsampled_out = report.rows_retained - unknown - ds.rows() as u64;
    report.rows_retained = ds.rows() as u64;
    report.empty = ds.is_empty();
    report.class_histogram = ds
        .classes
        .iter()
        .cloned()
        .zip(ds.class_histogram())
        .filter(|(_, n)| *n > 0)
        .collect();
    report.mode = Some(opts.mode.to_string());
    report.subsample_fraction = Some(opts.subsample_fraction);
    Ok((ds, report))
}
