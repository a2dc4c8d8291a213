use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epilab_cli::config::{Command, ExperimentConfig, OUT_ENV, THREADS_ENV};
use epilab_cli::{exit_code, run, CliError};

#[derive(Parser)]
#[command(name = "epilab", version, about = "Decay-growth experiments for epiperimetric inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct Constants {
    #[arg(long)]
    c_e: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Run whatever the config file names.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Check a trace CSV (`r,E,F,D`) against the comparison ODE.
    VerifyTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        k: Constants,
        #[arg(long)]
        tol: Option<f64>,
        /// Also check the trace hypotheses (needs the F and D columns).
        #[arg(long)]
        hypotheses: bool,
    },
    /// Print δ for (c_E, ε, γ, α).
    DeriveConstants {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        k: Constants,
    },
    /// Minimize the one-phase functional with the given boundary data.
    AcRun {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Measure the epiperimetric constant of a competitor.
    EpiCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cone: Option<PathBuf>,
        #[arg(long)]
        perturbation: Option<PathBuf>,
        /// One or more cutoff radii.
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
    },
    /// Normalized gradient flow and the η case split.
    LojaFlow {
        #[command(flatten)]
        common: Common,
        /// `model:<p>` for G = μ^{2p} (negative p flips the sign) or `arc`.
        #[arg(long)]
        objective: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
        #[arg(long)]
        b: Option<f64>,
    },
    /// Gradient identities and the constrained Łojasiewicz check.
    ObstacleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        family: Option<PathBuf>,
    },
    /// Aggregate report.json files into summary and plot-data CSVs.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn base(common: &Common, command: Option<Command>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&common.config, command) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(c)) => ExperimentConfig::new(c),
        (None, None) => return Err(CliError::Usage("`run` needs --config".into())),
    };
    if let Some(c) = command {
        if cfg.command != c {
            return Err(CliError::field("command", format!("config names `{}`, not `{}`", cfg.command.name(), c.name())));
        }
    }
    cfg.apply_env()?;
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.threads {
        cfg.threads = Some(t);
    }
    Ok(cfg)
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn constants(cfg: &mut ExperimentConfig, k: Constants) {
    set(&mut cfg.c_e, k.c_e);
    set(&mut cfg.epsilon, k.epsilon);
    set(&mut cfg.gamma, k.gamma);
    set(&mut cfg.alpha, k.alpha);
}

fn build(cli: Cli) -> Result<ExperimentConfig, CliError> {
    Ok(match cli.command {
        Sub::Run { common } => base(&common, None)?,
        Sub::VerifyTrace { common, trace, k, tol, hypotheses } => {
            let mut c = base(&common, Some(Command::VerifyTrace))?;
            set(&mut c.trace, trace);
            constants(&mut c, k);
            set(&mut c.tol, tol);
            if hypotheses {
                c.hypotheses = Some(true);
            }
            c
        }
        Sub::DeriveConstants { common, k } => {
            let mut c = base(&common, Some(Command::DeriveConstants))?;
            constants(&mut c, k);
            c
        }
        Sub::AcRun { common, boundary, restarts } => {
            let mut c = base(&common, Some(Command::AcRun))?;
            set(&mut c.boundary, boundary);
            set(&mut c.restarts, restarts);
            c
        }
        Sub::EpiCheck { common, cone, perturbation, rho } => {
            let mut c = base(&common, Some(Command::EpiCheck))?;
            set(&mut c.cone, cone);
            set(&mut c.perturbation, perturbation);
            set(&mut c.rho, rho);
            c
        }
        Sub::LojaFlow { common, objective, start, b } => {
            let mut c = base(&common, Some(Command::LojaFlow))?;
            set(&mut c.objective, objective);
            set(&mut c.start, start);
            set(&mut c.b, b);
            c
        }
        Sub::ObstacleCheck { common, d, family } => {
            let mut c = base(&common, Some(Command::ObstacleCheck))?;
            set(&mut c.d, d);
            set(&mut c.family, family);
            c
        }
        Sub::Report { common, dir } => {
            let mut c = base(&common, Some(Command::Report))?;
            set(&mut c.reports, dir);
            c
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = build(cli).and_then(|cfg| run(&cfg));
    match &result {
        Ok(m) => {
            let out = m.config.out_dir();
            println!("{} {} ({})", m.config.command.name(), if m.pass { "pass" } else { "FAIL" }, out.display());
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
