//! Experiment orchestration behind the `epilab` binary.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

use std::time::Instant;

use thiserror::Error;

pub use config::{Command, ExperimentConfig};
pub use manifest::RunManifest;
pub use report::{emit_plot_data, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid config field `{name}`: {reason}")]
    Field { name: &'static str, reason: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] epilab::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn field(name: &'static str, reason: impl Into<String>) -> Self {
        CliError::Field { name, reason: reason.into() }
    }

    /// 2 for bad input or configuration, 1 when a computation could not
    /// certify its result.
    pub fn exit_code(&self) -> i32 {
        use epilab::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::RadiusOutOfRange { .. }
                | E::TooFewSamples { .. }
                | E::MissingColumn(_)
                | E::MalformedTrace(_)
                | E::Unsupported(_)
                | E::Schema(_)
                | E::Io(_)
                | E::Csv(_)
                | E::Json(_) => 2,
                _ => 1,
            },
            _ => 2,
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;

fn init_threads(n: Option<usize>) {
    if let Some(n) = n {
        // a pool may already exist when several runs share a process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs one experiment. Writes `report.json` (except for `report`, which
/// writes the aggregate files) and `manifest.json` into the output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    config.validate()?;
    init_threads(config.threads);
    let started = Instant::now();
    let out = config.out_dir();
    std::fs::create_dir_all(&out)?;
    let res = match config.command {
        Command::DeriveConstants => commands::derive_constants(config)?,
        Command::VerifyTrace => commands::verify_trace(config, &out)?,
        Command::AcRun => commands::ac_run(config, &out)?,
        Command::EpiCheck => commands::epi_check(config)?,
        Command::LojaFlow => commands::loja_flow(config)?,
        Command::ObstacleCheck => commands::obstacle_check(config)?,
        Command::Report => commands::aggregate(config, &out)?,
    };
    let mut files = res.files;
    if config.command != Command::Report {
        let path = out.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(&res.report)? + "\n")?;
        files.push(path);
    }
    let manifest = RunManifest::build(config, &out, &files, res.report.pass, started.elapsed())?;
    manifest.write(&out)?;
    Ok(manifest)
}

pub fn exit_code(result: &Result<RunManifest, CliError>) -> i32 {
    match result {
        Ok(m) if m.pass => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(e) => e.exit_code(),
    }
}
