//! CSV ingestion and cleaning.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FlowRecord;
use crate::error::{Error, Result};

/// Per-reason counts of rows removed during ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Wrong number of fields or undecodable bytes.
    pub malformed_row: u64,
    /// A feature cell that is not a number.
    pub unparseable: u64,
    /// NaN or infinite feature values.
    pub non_finite: u64,
    pub empty_label: u64,
    /// Labels the selected regime cannot place.
    pub unknown_label: u64,
}

impl DropCounts {
    pub fn total(&self) -> u64 {
        self.malformed_row + self.unparseable + self.non_finite + self.empty_label + self.unknown_label
    }

    fn merge(&mut self, other: &DropCounts) {
        self.malformed_row += other.malformed_row;
        self.unparseable += other.unparseable;
        self.non_finite += other.non_finite;
        self.empty_label += other.empty_label;
        self.unknown_label += other.unknown_label;
    }
}

/// Accounting for one ingest run:
/// `rows_read = rows_dropped.total() + rows_subsampled_out + rows_retained`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files: Vec<String>,
    pub rows_read: u64,
    pub rows_dropped: DropCounts,
    pub rows_subsampled_out: u64,
    pub rows_retained: u64,
    pub class_histogram: BTreeMap<String, u64>,
    pub empty: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_fraction: Option<f64>,
}

impl IngestReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct FileResult {
    records: Vec<FlowRecord>,
    rows_read: u64,
    dropped: DropCounts,
}

fn parse_file(path: &Path, schema: &[String], label_column: &str) -> Result<FileResult> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            file: Some(path.to_path_buf()),
        })
    };
    let feature_cols: Vec<usize> = schema.iter().map(|n| column(n)).collect::<Result<_>>()?;
    let label_col = column(label_column)?;

    let mut out = FileResult {
        records: Vec::new(),
        rows_read: 0,
        dropped: DropCounts::default(),
    };
    for row in reader.records() {
        out.rows_read += 1;
        let row = match row {
            Ok(r) if r.len() == header.len() => r,
            Ok(_) => {
                out.dropped.malformed_row += 1;
                continue;
            }
            Err(e) if e.is_io_error() => return Err(csv_err(e)),
            Err(_) => {
                out.dropped.malformed_row += 1;
                continue;
            }
        };
        let mut features = Vec::with_capacity(feature_cols.len());
        let mut verdict = None;
        for &c in &feature_cols {
            match row[c].parse::<f32>() {
                Ok(v) if v.is_finite() => features.push(v),
                Ok(_) => {
                    verdict.get_or_insert(Drop::NonFinite);
                }
                Err(_) => {
                    verdict = Some(Drop::Unparseable);
                    break;
                }
            }
        }
        let label = &row[label_col];
        match verdict {
            Some(Drop::Unparseable) => out.dropped.unparseable += 1,
            Some(Drop::NonFinite) => out.dropped.non_finite += 1,
            None if label.is_empty() => out.dropped.empty_label += 1,
            None => out.records.push(FlowRecord {
                features,
                label: label.to_string(),
            }),
        }
    }
    Ok(out)
}

enum Drop {
    Unparseable,
    NonFinite,
}

/// Parses every file (in sorted path order) and keeps rows whose `schema`
/// columns are all finite numbers and whose label is non-empty. Columns are
/// matched by header name, so column order does not matter.
pub fn load_csv(paths: &[PathBuf], schema: &[String], label_column: &str) -> Result<(Vec<FlowRecord>, IngestReport)> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("no input files"));
    }
    let mut paths = paths.to_vec();
    paths.sort();
    if let Some(missing) = paths.iter().find(|p| !p.is_file()) {
        return Err(Error::FileNotFound(missing.clone()));
    }
    let results: Vec<FileResult> = paths
        .par_iter()
        .map(|p| parse_file(p, schema, label_column))
        .collect::<Result<_>>()?;

    let mut report = IngestReport {
        files: paths.iter().map(|p| p.display().to_string()).collect(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for r in results {
        report.rows_read += r.rows_read;
        report.rows_dropped.merge(&r.dropped);
        records.extend(r.records);
    }
    report.rows_retained = records.len() as u64;
    report.empty = records.is_empty();
    for r in &records {
        *report.class_histogram.entry(r.label.clone()).or_default() += 1;
    }
    Ok((records, report))
}

/// Expands directories into the `.csv` files they contain (non-recursive).
pub fn collect_csv_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for entry in std::fs::read_dir(input)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                    out.push(path);
                }
            }
        } else if input.exists() {
            out.push(input.clone());
        } else {
            return Err(Error::FileNotFound(input.clone()));
        }
    }
    out.sort();
    Ok(out)
}
