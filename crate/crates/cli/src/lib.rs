//! Batch runner behind the `micropolar` binary.
//!
//! Every subcommand reads one JSON [`config::RunConfig`], writes CSV and
//! JSON files into the output directory and stamps each of them with the
//! SHA-256 digest of the canonicalized configuration.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
pub mod config;
mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<micropolar::Error> for CliError {
    fn from(e: micropolar::Error) -> Self {
        use micropolar::Error as E;
        match e {
            E::Cfl { .. }
            | E::NonFinite { .. }
            | E::Unstable { .. }
            | E::DegenerateBasis { .. }
            | E::NotOrthonormal { .. } => CliError::Numerical(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "micropolar", version, about = "Micropolar fluid experiments on the periodic square")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Exit with status 4 when a verified inequality or bound fails.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for sweeps and tangent evaluations.
    #[arg(long, global = true, value_name = "K")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate and record norm time series.
    Simulate,
    /// Audit the a-priori energy estimates along a trajectory.
    VerifyEstimates,
    /// Evaluate the closed-form mode, node and dimension bounds.
    Bounds,
    /// Determining-modes twin experiment.
    SyncModes,
    /// Determining-nodes twin experiment (nudging).
    SyncNodes,
    /// Lyapunov spectrum, Kaplan–Yorke dimension and trace series.
    Lyapunov,
    /// Print the header of a checkpoint file.
    CheckpointInfo {
        /// Checkpoint to inspect.
        path: PathBuf,
    },
}

impl Command {
    fn kind(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::VerifyEstimates => "verify_estimates",
            Command::Bounds => "bounds",
            Command::SyncModes => "sync_modes",
            Command::SyncNodes => "sync_nodes",
            Command::Lyapunov => "lyapunov",
            Command::CheckpointInfo { .. } => "checkpoint_info",
        }
    }
}

/// Parse `argv` (including the program name), run, and return the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_IO;
        }
    };
    match pool.install(|| commands::dispatch(&cli)) {
        Ok(violations) if violations.is_empty() => EXIT_OK,
        Ok(violations) => {
            for v in &violations {
                eprintln!("violation: {v}");
            }
            if cli.strict {
                EXIT_VIOLATION
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
