//! Command-line driver: `simulate`, `diagnose` and `barriers`.
//!
//! Exit codes are 0 on success, 1 for input errors and 2 for computational
//! failures.

pub mod commands;
pub mod config;
pub mod snapshot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Environment variable consulted when `--out` is not given.
pub const OUT_ENV: &str = "SQG_SPHERE_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "sqg-sphere", version, about = "Critical SQG on the sphere: runs and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output (and for `diagnose`, input) run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override `[sim].seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation and write snapshots, ledger and manifest.
    Simulate(CommonArgs),
    /// Compute regularity diagnostics from an existing run directory.
    Diagnose(CommonArgs),
    /// Solve the barrier problems and write the sweeps.
    Barriers(CommonArgs),
}

impl CommonArgs {
    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .ok_or_else(|| CliError::Input(format!("no output directory: pass --out or set {OUT_ENV}")))
    }
}

/// Parse `args` and execute, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Barriers(a) => commands::barriers(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
