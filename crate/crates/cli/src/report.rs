//! JSON reports and CSV artifacts.
//!
//! A report is `{command, config, payload, meta}`. Everything except `meta`
//! (wall time, timestamp, thread count, cache activity) is a pure function of
//! the configuration, so two runs can be compared with [`Report::payload_eq`].

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::cache::CacheStatus;
use crate::config::RunConfig;
use crate::error::HarnessError;

#[derive(Clone, Debug, Serialize)]
pub struct CacheEvent {
    pub q: u64,
    pub n: usize,
    pub status: CacheStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub runtime_seconds: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub threads: usize,
    pub cache: Vec<CacheEvent>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config: RunConfig,
    pub payload: Value,
    pub meta: Meta,
}

impl Report {
    /// Equality of everything but `meta`, comparing the config as serialized
    /// (thread count and directories are not part of it).
    pub fn payload_eq(&self, other: &Report) -> bool {
        self.command == other.command
            && serde_json::to_value(&self.config).ok() == serde_json::to_value(&other.config).ok()
            && self.payload == other.payload
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A named CSV file produced alongside the report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub file_name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl RunOutput {
    /// Writes `<command>.json` and every table into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.report.command));
        std::fs::write(&json, self.report.to_json()? + "\n")?;
        written.push(json);
        for table in &self.tables {
            let path = dir.join(&table.file_name);
            std::fs::write(&path, &table.contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Builds CSV text from a header and rows of displayable cells.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer.write_record(&row).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}
