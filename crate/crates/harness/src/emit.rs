//! Sweep rows and their CSV/JSON serialization.
//!
//! Column order is fixed; the header row is always present; floats use the
//! shortest round-trip decimal form, so a sweep with a fixed master seed
//! emits byte-identical files regardless of worker count.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub s: f64,
    pub a_size: usize,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub pi_size: usize,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub samples_used: u64,
    pub suboptimality: f64,
    pub success: bool,
    pub wall_time_ms: u64,
}

pub const CSV_HEADER: &str =
    "algorithm,s,A_size,K,m,Pi_size,eps,delta,seed,samples_used,suboptimality,success,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Config(format!("unknown format '{other}'"))),
        }
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let k = r.k.map(|v| v.to_string()).unwrap_or_default();
        let m = r.m.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.s,
            r.a_size,
            k,
            m,
            r.pi_size,
            r.eps,
            r.delta,
            r.seed,
            r.samples_used,
            r.suboptimality,
            r.success,
            r.wall_time_ms
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn rows_to_json(rows: &[SweepRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows always serialize")
}

/// Write rows to `path` in the requested format. I/O failures carry the path.
pub fn emit(rows: &[SweepRow], format: OutputFormat, path: &Path) -> Result<(), HarnessError> {
    let body = match format {
        OutputFormat::Csv => rows_to_csv(rows),
        OutputFormat::Json => rows_to_json(rows),
    };
    std::fs::write(path, body)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e })
}
