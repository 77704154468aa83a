//! `spectra`: config-driven eigenvalue experiments and inequality checks.

mod commands;
mod config;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spectra_core::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spectra",
    version,
    about = "Eigenvalues of drifted weighted operators and universal inequality checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the smallest eigenvalues and the geometric constants.
    Solve(RunArgs),
    /// Solve, then evaluate the inequality checks.
    Check(CheckArgs),
    /// Solve on a sequence of resolutions and estimate the discretization error.
    Converge(RunArgs),
    /// List the coefficient presets and their parameters.
    Presets {
        /// Print the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON experiment config.
    pub config: Option<PathBuf>,
    /// Domain as JSON, e.g. '{"kind":"interval","a":0,"b":"pi"}'.
    #[arg(long)]
    pub domain: Option<String>,
    /// Preset name or JSON object with a "preset" field.
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Resolution or comma-separated list of resolutions.
    #[arg(long, value_delimiter = ',')]
    pub resolution: Option<Vec<usize>>,
    /// Number of eigenvalues.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// "all" or comma-separated check ids.
    #[arg(long)]
    pub checks: Option<String>,
    /// Relative residual tolerance of the eigensolver.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    /// Write stiffness.mtx and mass.mtx (Matrix Market) for the finest level.
    #[arg(long)]
    pub export_matrices: bool,
    /// Write the finest mesh as mesh.txt.
    #[arg(long)]
    pub export_mesh: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            domain: self.domain.clone(),
            coefficients: self.coefficients.clone(),
            resolution: self.resolution.clone(),
            k: self.k,
            checks: self.checks.clone(),
            tol: self.tol,
            output_dir: self.output_dir.clone(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Test-only: replace eigenvalue i (1-based) before the checks, as
    /// `i=VALUE` or `i=*FACTOR`. May be repeated.
    #[arg(long, hide = true)]
    pub inject_lambda: Vec<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var("SPECTRA_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| CliError::Usage(format!("SPECTRA_THREADS must be a positive integer, got '{v}'")))?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Check(args) => commands::check(&args),
        Command::Converge(args) => commands::converge(&args),
        Command::Presets { json } => presets::print(json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Core(spectra_core::Error::NotConverged { .. }) => EXIT_NOT_CONVERGED,
                _ => EXIT_USAGE,
            })
        }
    }
}
