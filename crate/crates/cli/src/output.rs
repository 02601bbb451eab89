use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use fedsae_core::MetricsRow;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const METRICS_HEADER: [&str; 6] = [
    "round",
    "test_accuracy",
    "train_loss",
    "dropout_rate",
    "mean_assigned",
    "mean_completed",
];

/// Metrics as CSV text. Floats use the shortest representation that round-trips.
pub fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.test_accuracy.to_string(),
            r.train_loss.to_string(),
            r.dropout_rate.to_string(),
            r.mean_assigned_workload.to_string(),
            r.mean_completed_workload.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| CliError::io("flushing metrics", e.into_error()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f =
        std::fs::File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Everything needed to reproduce a run. Output paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub data_seed: u64,
    pub metrics_files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_summary: Option<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seed: config.seed,
            data_seed: config.resolved_data_seed(),
            metrics_files: BTreeMap::new(),
            sweep_summary: None,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_vec_pretty(self)?;
        text.push(b'\n');
        write_file(path, &text)
    }
}
