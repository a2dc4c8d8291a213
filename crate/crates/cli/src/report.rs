//! Report envelope shared by all commands, and plot-data emission.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Trace,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub name: String,
    pub kind: SeriesKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    /// Drops non-finite points.
    pub fn new(name: &str, kind: SeriesKind, x: &[f64], y: &[f64]) -> Self {
        let (x, y) = x.iter().zip(y).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (*a, *b)).unzip();
        Self { name: name.to_string(), kind, x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonRow {
    pub label: String,
    pub rho: Option<f64>,
    pub e_rz: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<serde_json::Value>,
    pub values: BTreeMap<String, Option<f64>>,
    pub tags: BTreeMap<String, String>,
    pub series: Vec<Series>,
    pub epsilon: Vec<EpsilonRow>,
}

pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl RunReport {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            pass: true,
            checks: Vec::new(),
            values: BTreeMap::new(),
            tags: BTreeMap::new(),
            series: Vec::new(),
            epsilon: Vec::new(),
        }
    }

    pub fn check(&mut self, r: &epilab::engine::VerificationReport) {
        self.pass &= r.pass;
        self.checks.push(r.summary_json());
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), finite(v));
    }

    pub fn tag(&mut self, key: &str, v: impl Into<String>) {
        self.tags.insert(key.to_string(), v.into());
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
    }
}

fn check_field<'a>(c: &'a serde_json::Value, key: &str) -> &'a serde_json::Value {
    c.get(key).unwrap_or(&serde_json::Value::Null)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `summary.csv`, `traces.csv`, `epsilon.csv` and `flow.csv` in long
/// format. Every file gets its header even when there is nothing to write.
pub fn emit_plot_data(reports: &[(String, RunReport)], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out)?;
    let path = |name: &str| out.join(name);

    let mut summary = csv::Writer::from_writer(File::create(path("summary.csv"))?);
    summary.write_record(["report", "command", "seed", "op", "pass", "worst_margin"])?;
    for (name, r) in reports {
        for c in &r.checks {
            let op = check_field(c, "op").as_str().unwrap_or("").to_string();
            let pass = check_field(c, "pass").as_bool().unwrap_or(false);
            let worst = check_field(c, "worst_margin").as_f64();
            summary.write_record([name.clone(), r.command.clone(), r.seed.to_string(), op, pass.to_string(), opt(worst)])?;
        }
    }
    summary.flush()?;

    for (file, kind) in [("traces.csv", SeriesKind::Trace), ("flow.csv", SeriesKind::Flow)] {
        let mut w = csv::Writer::from_writer(File::create(path(file))?);
        w.write_record(["report", "series", "x", "y"])?;
        for (name, r) in reports {
            for s in r.series.iter().filter(|s| s.kind == kind) {
                for (x, y) in s.x.iter().zip(&s.y) {
                    w.write_record([name.clone(), s.name.clone(), x.to_string(), y.to_string()])?;
                }
            }
        }
        w.flush()?;
    }

    let mut eps = csv::Writer::from_writer(File::create(path("epsilon.csv"))?);
    eps.write_record(["report", "label", "rho", "e_rz", "epsilon"])?;
    for (name, r) in reports {
        for row in &r.epsilon {
            eps.write_record([name.clone(), row.label.clone(), opt(row.rho), opt(row.e_rz), opt(row.epsilon)])?;
        }
    }
    eps.flush()?;

    Ok(["summary.csv", "traces.csv", "epsilon.csv", "flow.csv"].iter().map(|n| path(n)).collect())
}

/// All `report.json` files under `dir`, sorted by path; names are the
/// containing directory relative to `dir`.
pub fn collect_reports(dir: &Path) -> Result<Vec<(String, RunReport)>, CliError> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == "report.json") {
                found.push(p);
            }
        }
    }
    found.sort();
    found
        .into_iter()
        .map(|p| {
            let parent = p.parent().unwrap_or(dir);
            let name = parent.strip_prefix(dir).unwrap_or(parent).display().to_string();
            let name = if name.is_empty() { ".".to_string() } else { name };
            Ok((name, RunReport::read(&p)?))
        })
        .collect()
}
