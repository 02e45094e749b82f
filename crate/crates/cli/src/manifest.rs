//! Record of a training run, sufficient to repeat it.

use std::path::Path;

use flowsentinel_core::training::{EpochRecord, MetricsReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
    pub split: u64,
    pub model_init: u64,
    pub training: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCounts {
    pub cache: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Fully resolved: mode and feature list are always present.
    pub config: RunConfig,
    pub seeds: Seeds,
    pub dataset_sha256: String,
    pub row_counts: RowCounts,
    pub features: Vec<String>,
    pub metrics: MetricsReport,
    pub final_epoch: Option<EpochRecord>,
    pub model_sha256: String,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self).map_err(flowsentinel_core::Error::from)?;
        std::fs::write(path, json + "\n").map_err(flowsentinel_core::Error::from)?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
