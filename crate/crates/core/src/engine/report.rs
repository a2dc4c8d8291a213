use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Per-sample margins of a check. A sample fails iff its margin is below `-tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub op: String,
    pub pass: bool,
    pub tolerance: f64,
    pub flags: Vec<bool>,
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub worst_index: Option<usize>,
    pub r2: Option<f64>,
    pub ratio: Option<f64>,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn from_margins(op: impl Into<String>, margins: Vec<f64>, tolerance: f64) -> Self {
        let flags: Vec<bool> = margins.iter().map(|&m| m >= -tolerance).collect();
        let (worst_index, worst_margin) = margins
            .iter()
            .copied()
            .enumerate()
            .fold((None, f64::INFINITY), |(bi, bm), (i, m)| {
                // NaN margins count as worst
                if m.is_nan() || m < bm {
                    (Some(i), if m.is_nan() { f64::NEG_INFINITY } else { m })
                } else {
                    (bi, bm)
                }
            });
        Self {
            op: op.into(),
            pass: flags.iter().all(|&f| f),
            tolerance,
            flags,
            margins,
            worst_margin,
            worst_index,
            r2: None,
            ratio: None,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Fold another check into this one: both must pass.
    pub fn and(mut self, other: &VerificationReport) -> Self {
        self.pass &= other.pass;
        if other.worst_margin < self.worst_margin {
            self.worst_margin = other.worst_margin;
        }
        for (k, v) in &other.details {
            self.details.insert(format!("{}.{}", other.op, k), *v);
        }
        self
    }

    /// Compact record used by the CLI and the experiment runner.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "op": self.op,
            "pass": self.pass,
            "worst_margin": finite_or_null(self.worst_margin),
            "r2": self.r2.map(finite_or_null),
            "ratio": self.ratio.map(finite_or_null),
            "details": self.details.iter().map(|(k, v)| (k.clone(), finite_or_null(*v))).collect::<serde_json::Map<_, _>>(),
            "notes": self.notes,
        })
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}
