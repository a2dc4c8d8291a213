//! Flat key-value experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUT_ENV: &str = "EPILAB_OUT";
pub const THREADS_ENV: &str = "EPILAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyTrace,
    DeriveConstants,
    AcRun,
    EpiCheck,
    LojaFlow,
    ObstacleCheck,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyTrace => "verify-trace",
            Command::DeriveConstants => "derive-constants",
            Command::AcRun => "ac-run",
            Command::EpiCheck => "epi-check",
            Command::LojaFlow => "loja-flow",
            Command::ObstacleCheck => "obstacle-check",
            Command::Report => "report",
        }
    }
}

/// Every key is optional except `command`; each command validates the keys it
/// needs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,

    // trace checks and constants
    pub trace: Option<PathBuf>,
    pub c_e: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub tol: Option<f64>,
    pub hypotheses: Option<bool>,

    // minimizer
    pub boundary: Option<PathBuf>,
    pub n_r: Option<usize>,
    pub restarts: Option<usize>,
    pub eps_vol: Option<Vec<f64>>,
    pub max_sweeps: Option<usize>,
    pub theta_e: Option<f64>,
    pub r_lo: Option<f64>,
    pub samples: Option<usize>,
    pub dini_c: Option<f64>,

    // competitors
    pub cone: Option<PathBuf>,
    pub perturbation: Option<PathBuf>,
    pub rho: Option<Vec<f64>>,
    pub epsilon_min: Option<f64>,

    // flow
    pub objective: Option<String>,
    pub start: Option<Vec<f64>>,
    pub b: Option<f64>,
    pub beta: Option<f64>,
    pub c: Option<f64>,

    // obstacle
    pub d: Option<usize>,
    pub family: Option<PathBuf>,
    pub delta: Option<f64>,
    pub c_max: Option<f64>,

    // aggregation
    pub reports: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            out: None,
            threads: None,
            trace: None,
            c_e: None,
            epsilon: None,
            gamma: None,
            alpha: None,
            lambda_plus: None,
            lambda_minus: None,
            tol: None,
            hypotheses: None,
            boundary: None,
            n_r: None,
            restarts: None,
            eps_vol: None,
            max_sweeps: None,
            theta_e: None,
            r_lo: None,
            samples: None,
            dini_c: None,
            cone: None,
            perturbation: None,
            rho: None,
            epsilon_min: None,
            objective: None,
            start: None,
            b: None,
            beta: None,
            c: None,
            d: None,
            family: None,
            delta: None,
            c_max: None,
            reports: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        for p in [
            &mut self.out,
            &mut self.trace,
            &mut self.boundary,
            &mut self.cone,
            &mut self.perturbation,
            &mut self.family,
            &mut self.reports,
        ] {
            if let Some(path) = p.as_mut() {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
    }

    /// Applies `EPILAB_OUT` and `EPILAB_THREADS` over the file values.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(out) = std::env::var(OUT_ENV) {
            if !out.is_empty() {
                self.out = Some(PathBuf::from(out));
            }
        }
        if let Ok(t) = std::env::var(THREADS_ENV) {
            let n = t
                .parse()
                .map_err(|_| CliError::field("threads", format!("{THREADS_ENV}={t} is not a count")))?;
            self.threads = Some(n);
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("epilab-out"))
    }

    /// Checks that the inputs the command needs are present and exist.
    pub fn validate(&self) -> Result<(), CliError> {
        let need = |p: &Option<PathBuf>, name: &'static str| -> Result<(), CliError> {
            match p {
                None => Err(CliError::field(name, "is required")),
                Some(path) if !path.exists() => {
                    Err(CliError::field(name, format!("{} does not exist", path.display())))
                }
                Some(_) => Ok(()),
            }
        };
        if self.threads == Some(0) {
            return Err(CliError::field("threads", "must be positive"));
        }
        match self.command {
            Command::VerifyTrace => need(&self.trace, "trace"),
            Command::DeriveConstants => Ok(()),
            Command::AcRun => need(&self.boundary, "boundary"),
            Command::EpiCheck => {
                need(&self.cone, "cone")?;
                need(&self.perturbation, "perturbation")
            }
            Command::LojaFlow => {
                if self.objective.is_none() {
                    return Err(CliError::field("objective", "is required"));
                }
                if self.start.as_ref().map_or(true, |s| s.is_empty()) {
                    return Err(CliError::field("start", "is required"));
                }
                Ok(())
            }
            Command::ObstacleCheck => need(&self.family, "family"),
            Command::Report => need(&self.reports, "reports"),
        }
    }
}
