//! `trialkit`: familywise error, power and correlation calculations for
//! platform trials with a shared control arm.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trialkit_core::{Error, ScenarioError};

#[derive(Parser, Debug)]
#[command(name = "trialkit", version, about = "FWER, power and correlation for platform trials")]
pub struct Cli {
    /// Worker threads for simulation (results do not depend on it).
    #[arg(long, global = true, env = "TRIALKIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value = "table")]
    out: Format,
    /// Override a comparison's opening time, e.g. `--open E2=1.0`.
    #[arg(long, value_name = "ID=TIME", value_parser = parse_open)]
    open: Vec<(String, f64)>,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected ID,ID, got {s}"))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

fn parse_open(s: &str) -> Result<(String, f64), String> {
    let (id, t) = s.split_once('=').ok_or_else(|| format!("expected ID=TIME, got {s}"))?;
    let t: f64 = t.trim().parse().map_err(|e| format!("bad time in {s}: {e}"))?;
    Ok((id.trim().to_string(), t))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Correlation between comparison test statistics.
    Correlation {
        #[command(flatten)]
        common: Common,
        /// Restrict to pairs, e.g. `--pair E1,E6`.
        #[arg(long, value_name = "ID,ID", value_parser = parse_pair)]
        pair: Vec<(String, String)>,
        /// Also estimate correlations by simulation under the null.
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Familywise error rate at the scenario's significance levels.
    Fwer {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
    },
    /// Pairwise, disjunctive and conjunctive power.
    Power {
        #[command(flatten)]
        common: Common,
    },
    /// Common significance level that achieves a target FWER.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: Option<f64>,
        /// Re-solve without this planned comparison.
        #[arg(long, value_name = "ID")]
        buyback: Option<String>,
        /// Iterate levels, event targets and overlap to a fixed point.
        #[arg(long, conflicts_with = "buyback")]
        recursive: bool,
    },
    /// Patient-level simulation of the platform.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override every comparison's data-generating effect.
        #[arg(long, value_enum)]
        truth: Option<TruthArg>,
    },
    /// Strategy for controlling type I error.
    Recommend {
        #[command(flatten)]
        common: Common,
        #[arg(long, action = clap::ArgAction::Set, default_value = "true")]
        fwer_required: bool,
        #[arg(long, action = clap::ArgAction::Set, default_value = "true")]
        related: bool,
        /// The newest arm is a post-hoc addition that changes the overlap.
        #[arg(long)]
        post_hoc: bool,
        #[arg(long, default_value_t = 0.30)]
        correlation_threshold: f64,
        #[arg(long, default_value_t = 0.60)]
        overlap_threshold: f64,
    },
    /// Expected control and shared control events.
    PredictEvents {
        #[command(flatten)]
        common: Common,
        /// Platform time; defaults to each comparison's analysis.
        #[arg(long)]
        at: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sidak,
    Bonferroni,
    Dunnett,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruthArg {
    Null,
    Alternative,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    NoConvergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::NoConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::NoConvergence(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        let root = match e {
            Error::Replicate { source, .. } => *source,
            other => other,
        };
        match root {
            Error::NoConvergence { .. } => CliError::NoConvergence(msg),
            Error::InvalidDesign(_)
            | Error::UnreachableTarget { .. }
            | Error::DimensionMismatch(_)
            | Error::OutOfRange { .. }
            | Error::NonFinite { .. } => CliError::Config(msg),
            _ => CliError::Numeric(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
