//! Report emission. Every JSON report carries the same header block and is
//! byte-stable for a fixed config: anything wall-clock dependent (timestamp,
//! elapsed time, thread count) goes to a runinfo sidecar instead, so reruns
//! and --threads changes can be diffed bit for bit.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Provenance block embedded at the top of every report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportHeader {
    pub artifact_version: &'static str,
    pub generator_id: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl ReportHeader {
    pub fn new(seed: u64, config_text: &str) -> Self {
        ReportHeader {
            artifact_version: env!("CARGO_PKG_VERSION"),
            generator_id: circle_rds::GENERATOR_ID,
            seed,
            config_sha256: sha256_hex(config_text),
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Output directory plus filename prefix; all artifacts of one run are
/// `{prefix}_{name}` inside the directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    dir: PathBuf,
    prefix: String,
}

impl RunPaths {
    pub fn new(dir: PathBuf, prefix: String) -> std::io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(RunPaths { dir, prefix })
    }

    /// Bare filename, for references inside reports: embedding the output
    /// directory would make report bytes depend on --out.
    pub fn name(&self, name: &str) -> String {
        format!("{}_{}", self.prefix, name)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(self.name(name))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    std::fs::write(path, text)
}

/// One f64 per row under a single-column header, 17 significant digits.
pub fn write_samples_csv(path: &Path, column: &str, values: &[f64]) -> std::io::Result<()> {
    let mut out = String::with_capacity(values.len() * 26 + column.len() + 1);
    out.push_str(column);
    out.push('\n');
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
    std::fs::write(path, out)
}

/// Multi-column CSV of f64 rows, 17 significant digits per cell.
pub fn write_table_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// Wall-clock facts of one invocation. Kept out of the main report so that
/// the report bytes depend on the config alone.
#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    command: &'a str,
    timestamp_unix_ms: u128,
    elapsed_seconds: f64,
    threads: usize,
}

pub fn write_runinfo(paths: &RunPaths, command: &str, elapsed_seconds: f64) -> std::io::Result<()> {
    let timestamp_unix_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let info = RunInfo {
        command,
        timestamp_unix_ms,
        elapsed_seconds,
        threads: rayon::current_num_threads(),
    };
    write_json(&paths.file(&format!("{command}_runinfo.json")), &info)
}
