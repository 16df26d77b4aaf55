//! Command-line driver for aggregate absorption spectra.
//!
//! `exspec spectrum` writes spectra and traces for one coupling, `exspec vscan`
//! compares ZOFE against pseudomodes over a coupling grid and `exspec converge`
//! walks the pseudomode cap ladder. Scenarios are described in [`config`].

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{MethodChoice, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(#[from] exciton_spectra::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{failed} of {total} scan points failed")]
    PartialScan { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) | CliError::Io { .. } => 2,
            CliError::PartialScan { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "exspec",
    version,
    about = "Absorption spectra of molecular aggregates via ZOFE and pseudomodes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum and correlation trace at the configured coupling.
    Spectrum(CommonArgs),
    /// ZOFE/pseudomode overlap across the [scan] coupling grid.
    Vscan(CommonArgs),
    /// Pseudomode cap convergence ladder at the configured coupling.
    Converge(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Spectrum(a) | Command::Vscan(a) | Command::Converge(a) => a,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "K")]
    pub threads: Option<usize>,
    /// Overrides run.method from the config.
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
}

fn execute(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let scenario = Scenario::from_path(&args.config, args.method)?;
    let pool = match args.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;

    pool.install(|| match command {
        Command::Spectrum(_) => {
            let report = run::run_spectrum(&scenario, &args.out)?;
            if let Some(o) = report.comparison.overlap {
                println!("overlap\t{o:.6}");
            }
            for r in &report.comparison.results {
                if let Some(c) = r.caps {
                    println!("caps\t{}\t{}", c.total, c.per_mode);
                }
            }
            Ok(())
        }
        Command::Vscan(_) => {
            let report = run::run_vscan(&scenario, &args.out)?;
            for (v, msg) in &report.failures {
                eprintln!("exspec: V = {v}: {msg}");
            }
            if report.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::PartialScan {
                    failed: report.failures.len(),
                    total: report.rows.len(),
                })
            }
        }
        Command::Converge(_) => {
            let report = run::run_converge(&scenario, &args.out)?;
            let c = report.converged.caps;
            println!("caps\t{}\t{}", c.total, c.per_mode);
            Ok(())
        }
    })
}

/// Parses `args` and runs, returning the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("exspec: {e}");
            e.exit_code()
        }
    }
}
