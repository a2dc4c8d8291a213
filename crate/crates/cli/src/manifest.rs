use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// `manifest.json`. Everything except `wall_time_s` is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub pass: bool,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok((digest.iter().map(|b| format!("{b:02x}")).collect(), bytes.len() as u64))
}

impl RunManifest {
    pub fn build(
        config: &ExperimentConfig,
        out: &Path,
        files: &[PathBuf],
        pass: bool,
        wall: Duration,
    ) -> Result<Self, CliError> {
        let mut artifacts = files
            .iter()
            .map(|f| {
                let (sha256, bytes) = sha256_file(f)?;
                let rel = f.strip_prefix(out).unwrap_or(f).display().to_string();
                Ok(Artifact { path: rel, sha256, bytes })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(Self {
            config: config.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: wall.as_secs_f64(),
            pass,
            artifacts,
        })
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, CliError> {
        let path = out.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    /// Recomputes every checksum; returns the paths that no longer match.
    pub fn verify(&self, out: &Path) -> Result<Vec<String>, CliError> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let (sha, _) = sha256_file(&out.join(&a.path))?;
            if sha != a.sha256 {
                bad.push(a.path.clone());
            }
        }
        Ok(bad)
    }
}
