//! `qem`: verification suites for quasi-Einstein structures.
//!
//! Exit codes: 0 when every check passes, 1 when a verification check
//! fails, 2 on malformed input or configuration.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use qem_core::Execution;

use commands::{CommandError, Tol};
use report::Report;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

fn positive_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.trim().parse().map_err(|e| format!("`{s}` is not a number: {e}"))?;
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(format!("tolerance must be positive and finite, got {s}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "qem", version, about = "Verify quasi-Einstein structures on warped products and solvable Lie groups")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,

    /// Replace every residual tolerance (defaults: 1e-9 warped equation,
    /// 1e-12 trace/closed-form/left-invariant checks, 1e-10 other identities).
    #[arg(long, global = true, env = "QEM_TOL", value_parser = positive_tol)]
    pub tol: Option<f64>,

    /// Evaluate independent jobs on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify the ten catalog models at m = 1.5, 2, 3, 7.
    CatalogVerify {
        /// Interior sample points per warped model.
        #[arg(long, default_value_t = qem_core::qe::DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Build and verify the four-dimensional solvable example.
    #[command(allow_negative_numbers = true)]
    Solvable {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Convergence diagnostics of the solvable family as m grows.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Strictly ascending, comma separated.
        #[arg(long = "m", value_delimiter = ',', required = true, num_args = 1..)]
        m: Vec<f64>,
    },
    /// Verify a structure described by a JSON file (see docs/check-file.md).
    Check { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Text => report.render_text(),
        Format::Json => report.to_json() + "\n",
    }
}

/// Runs the command line `argv` (including the program name) to completion.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { stdout: String::new(), stderr: text, code: EXIT_CONFIG }
            } else {
                Outcome { stdout: text, stderr: String::new(), code: EXIT_PASS }
            };
        }
    };
    let tol = Tol(cli.tol);
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let result = match &cli.command {
        Command::CatalogVerify { samples } => commands::catalog_verify(*samples, tol, exec),
        Command::Solvable { m, alpha, beta } => commands::solvable(*m, *alpha, *beta, tol),
        Command::Sweep { alpha, beta, m } => commands::sweep(*alpha, *beta, m, tol, exec),
        Command::Check { file } => match std::fs::read_to_string(file) {
            Ok(text) => commands::check_text(&text, tol),
            Err(e) => Err(CommandError::Config(format!("{}: {e}", file.display()))),
        },
    };
    match result {
        Ok(report) => Outcome {
            stdout: render(&report, cli.format),
            stderr: String::new(),
            code: if report.passed() { EXIT_PASS } else { EXIT_FAIL },
        },
        Err(CommandError::Verification(report)) => {
            Outcome { stdout: render(&report, cli.format), stderr: String::new(), code: EXIT_FAIL }
        }
        Err(CommandError::Config(msg)) => {
            Outcome { stdout: String::new(), stderr: format!("error: {msg}\n"), code: EXIT_CONFIG }
        }
    }
}
