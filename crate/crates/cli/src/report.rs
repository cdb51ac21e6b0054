//! Report assembly: named checks, CSV tables and the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use calorix_core::VERSION;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, TaskName};
use crate::error::CliError;

/// One asserted quantity: passes when `value <= limit` (NaN fails).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value <= limit }
    }
}

/// CSV body (header row included) under a file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub body: String,
}

impl Table {
    pub fn from_rows(name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Self, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(Self { name: name.into(), body: String::from_utf8(bytes).expect("csv output is utf-8") })
    }

    pub fn from_writer<F>(name: &str, write: F) -> Result<Self, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf)?;
        Ok(Self { name: name.into(), body: String::from_utf8(buf).expect("csv output is utf-8") })
    }
}

/// Everything a task produced.
#[derive(Debug, Clone)]
pub struct TaskReport {
    pub task: TaskName,
    pub tables: Vec<Table>,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
}

impl TaskReport {
    pub fn new(task: TaskName) -> Self {
        Self { task, tables: vec![], results: serde_json::Value::Null, checks: vec![] }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// Aligned `check | value | limit | status` summary.
    pub fn summary(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  {:>12}  {:>12}  status\n", "check", "value", "limit");
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{:<width$}  {:>12.3e}  {:>12.3e}  {status}\n", c.name, c.value, c.limit));
        }
        out
    }

    /// Writes `<task>-<table>.csv` and `<task>.json` into `dir`, each
    /// prefixed by (or embedding) the library version and echoed config.
    pub fn write(&self, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if config.output.formats.contains(&Format::Csv) {
            let preamble = format!(
                "# calorix {VERSION}\n# task: {}\n# seed: {}\n# config: {}\n",
                self.task,
                config.seed,
                config.echo()
            );
            for t in &self.tables {
                let path = dir.join(format!("{}-{}.csv", self.task, t.name));
                fs::write(&path, format!("{preamble}{}", t.body))?;
                written.push(path);
            }
        }
        if config.output.formats.contains(&Format::Json) {
            let doc = serde_json::json!({
                "version": VERSION,
                "task": self.task,
                "config": config,
                "checks": self.checks,
                "passed": self.passed(),
                "results": self.results,
            });
            let path = dir.join(format!("{}.json", self.task));
            fs::write(&path, serde_json::to_string_pretty(&doc).expect("report serializes") + "\n")?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Shortest round-trip formatting used in every table.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn point(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}
