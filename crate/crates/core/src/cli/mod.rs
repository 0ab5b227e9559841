//! Command-line front end.
//!
//! Exit codes: 2 for configuration errors (including invalid parameters),
//! 3 for numeric failures, 1 for I/O failures.

pub mod commands;
pub mod config;

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::inversion::InversionConfig;
use config::{RunConfig, Settings};

#[derive(Debug, Parser)]
#[command(name = "sojourn", version, about = "Sojourn times in a threshold queue with inspected rate switching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write transform.csv and density.csv.
    Analyze(RunArgs),
    /// Compare the analytic mean with transform differentiation.
    Moments(RunArgs),
    /// Simulate and summarise sojourn times.
    Simulate(SimulateArgs),
    /// Compare analytic and simulated CDFs and sweep the inspection rate.
    Compare(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub mu0: Option<String>,
    #[arg(long)]
    pub mu1: Option<String>,
    /// Inspection rate, or `continuous`.
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long = "K")]
    pub k: Option<String>,
    /// continuous, exponential or erlang2.
    #[arg(long)]
    pub regime: Option<String>,
    /// `start:stop:count`.
    #[arg(long = "s_grid")]
    pub s_grid: Option<String>,
    /// `start:stop:count`, starting above 0.
    #[arg(long = "t_grid")]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub customers: Option<String>,
    #[arg(long)]
    pub warmup: Option<String>,
    #[arg(long)]
    pub replications: Option<String>,
    #[arg(long = "out_dir")]
    pub out_dir: Option<String>,
    /// Euler averaging terms.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Last partial sum of the inversion series.
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long = "target_error")]
    pub target_error: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Dump every sojourn time here, one per line.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub(crate) fn stdout(e: io::Error) -> Self {
        CliError::Io(format!("stdout: {e}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Stability { .. } | Error::Domain(_) | Error::Regime(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, Error> {
        let mut settings = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let pairs = [
            ("lambda", &self.lambda),
            ("mu0", &self.mu0),
            ("mu1", &self.mu1),
            ("gamma", &self.gamma),
            ("K", &self.k),
            ("regime", &self.regime),
            ("s_grid", &self.s_grid),
            ("t_grid", &self.t_grid),
            ("seed", &self.seed),
            ("customers", &self.customers),
            ("warmup", &self.warmup),
            ("replications", &self.replications),
            ("out_dir", &self.out_dir),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v)?;
            }
        }
        settings.merge(&flags);
        Ok(settings)
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut inversion = InversionConfig::default();
        if let Some(t) = self.terms {
            inversion.terms = t;
        }
        if let Some(t) = self.truncation {
            inversion.truncation = t;
        }
        if let Some(t) = self.target_error {
            inversion.target_abs_error = t;
        }
        Ok(RunConfig::resolve(&self.settings()?, inversion)?)
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(args) => commands::cmd_analyze(&args.resolve()?, out),
        Command::Moments(args) => commands::cmd_moments(&args.resolve()?, out),
        Command::Simulate(args) => commands::cmd_simulate(&args.run.resolve()?, args.samples.as_deref(), out),
        Command::Compare(args) => commands::cmd_compare(&args.resolve()?, out),
    }
}
