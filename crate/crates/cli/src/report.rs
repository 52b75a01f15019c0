//! Run reports and the files written for them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliResult;

/// One named invariant and how the run fared against it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    /// Module-qualified name of the invariant exercised.
    pub invariant: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(invariant: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { invariant: invariant.into(), passed, value: None, stderr: None, tolerance: None, detail: detail.into() }
    }

    /// `value ≤ tolerance`.
    pub fn at_most(invariant: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Verdict { value: Some(value), tolerance: Some(tolerance), ..Verdict::new(invariant, value <= tolerance, detail) }
    }

    pub fn with_value(mut self, value: f64, stderr: Option<f64>) -> Self {
        self.value = Some(value);
        self.stderr = stderr;
        self
    }
}

/// A comma-separated table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let line = |cells: &[String]| cells.iter().map(|c| cell(c)).collect::<Vec<_>>().join(",") + "\n";
        let mut s = line(&self.header);
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }
}

/// Quote a cell if it holds a separator, quote or newline.
fn cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

/// Full-precision rendering used in every table.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub verdicts: Vec<Verdict>,
    pub diagnostics: Map<String, Value>,
    pub files: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    /// Raw text artifacts such as measure tables and snapshots.
    #[serde(skip)]
    pub attachments: Vec<(String, String)>,
    /// Kept out of the written files so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        RunReport {
            config,
            verdicts: Vec::new(),
            diagnostics: Map::new(),
            files: Vec::new(),
            tables: Vec::new(),
            attachments: Vec::new(),
            wall_clock: Duration::ZERO,
        }
    }

    pub fn check(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    /// Write `summary.json`, each table as CSV and each attachment under `dir`.
    pub fn write(&mut self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files: Vec<(String, String)> = self.tables.iter().map(|t| (format!("{}.csv", t.name), t.render())).collect();
        files.extend(self.attachments.iter().cloned());
        self.files = files.iter().map(|(n, _)| n.clone()).collect();
        let mut written = Vec::with_capacity(files.len() + 1);
        for (name, body) in &files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        let mut summary = serde_json::to_string_pretty(self).map_err(|e| crate::error::CliError::Io(e.to_string()))?;
        summary.push('\n');
        let path = dir.join("summary.json");
        fs::write(&path, summary)?;
        written.push(path);
        Ok(written)
    }

    /// Human-readable verdict listing for the terminal.
    pub fn render_verdicts(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            let tag = if v.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {}", v.invariant, v.detail);
        }
        s
    }
}
