use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Seventeen significant digits, round-trip exact.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header plus one line per row; `None` cells are left empty.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.map(num).unwrap_or_default()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Manifest of one command invocation, written as `run.json`.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: serde_json::Value,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Output directory that remembers every file written to it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    started: DateTime<Utc>,
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_owned(), source })?;
        Ok(Self { root: root.to_owned(), written: Vec::new(), started: Utc::now() })
    }

    pub fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.root.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut body = serde_json::to_string_pretty(value).expect("serialisable output");
        body.push('\n');
        self.write(name, &body)
    }

    /// Write `run.json` listing everything written so far.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, seed: Option<u64>) -> CliResult<()> {
        let record = RunRecord {
            command: command.to_owned(),
            config: serde_json::to_value(config).expect("serialisable config"),
            started: stamp(self.started),
            finished: stamp(Utc::now()),
            outputs: self.written.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
        };
        self.write_json("run.json", &record)
    }
}
