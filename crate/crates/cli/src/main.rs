//! `smooth-rough`: evaluate, tabulate, verify and audit from the command line.
//!
//! Exit codes: 0 pass, 1 identity or bound failure, 2 usage, 3 domain or
//! resource error, 4 inconclusive.

mod commands;
mod functions;
mod grid;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use smooth_rough::Tables64;

use commands::{AuditArgs, ComputeArgs, VerifyArgs};
use settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] smooth_rough::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(smooth_rough::Error::Domain(_) | smooth_rough::Error::Resource(_)) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "smooth-rough", version, about = "Smooth and rough numbers, de Bruijn approximants and their error terms")]
struct Cli {
    /// key=value file setting max_x, max_enumeration, max_breakpoints, max_u,
    /// max_truncation_x, tol, truncation_x; SMOOTH_ROUGH_<KEY> variables override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one function; ranges produce CSV `x,y,u,value`
    Compute {
        #[arg(long = "fn")]
        function: String,
        /// value, list `a,b,c` or range `a:b:Nlin|Nlog`
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        u: Option<String>,
        /// comma-separated integers
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// CSV of one or more functions (`--fn v,w`) over a grid
    Table {
        #[arg(long = "fn")]
        functions: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an identity suite and write a JSON report
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        x: Option<String>,
        /// every integer 1..=N
        #[arg(long, value_parser = count_arg)]
        x_max: Option<u64>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// truncation point of the infinite δ integral
        #[arg(long, value_parser = count_arg)]
        truncation_x: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Audit a bound; CSV rows on stdout (or --output), JSON summary on stderr (or --summary)
    Audit {
        /// unconditional, rh, trivial, corexact or corexact2
        #[arg(long)]
        bound: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        x: Option<String>,
        /// audit on a refined log grid in [1, X]
        #[arg(long = "X", value_parser = count_arg)]
        big_x: Option<u64>,
        /// f(y) for corexact/corexact2; default is the grid maximum
        #[arg(long)]
        f: Option<f64>,
        /// corexact with Q* and R*
        #[arg(long)]
        starred: bool,
        /// log-spaced points of the --X grid
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
}

/// Integers may be written as `1e10`.
fn count_arg(s: &str) -> Result<u64, String> {
    settings::parse_count("value", s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let settings = Settings::load(cli.config.as_deref())?;
    let tables = Arc::new(Tables64::new(settings.caps)?);
    match cli.command {
        Command::Compute {
            function,
            x,
            u,
            y,
            output,
        } => commands::compute(
            ComputeArgs {
                functions: function,
                x,
                u,
                y,
                output,
                table: false,
            },
            &tables,
        ),
        Command::Table {
            functions,
            x,
            u,
            y,
            output,
        } => commands::compute(
            ComputeArgs {
                functions,
                x,
                u,
                y,
                output,
                table: true,
            },
            &tables,
        ),
        Command::Verify {
            suite,
            x,
            x_max,
            y,
            tol,
            truncation_x,
            output,
            no_timestamp,
        } => commands::verify(
            VerifyArgs {
                suite,
                x,
                x_max,
                y,
                tol,
                truncation_x,
                output,
                no_timestamp,
            },
            &settings,
            &tables,
        ),
        Command::Audit {
            bound,
            y,
            x,
            big_x,
            f,
            starred,
            points,
            output,
            summary,
            no_timestamp,
        } => commands::audit(
            AuditArgs {
                bound,
                y,
                x,
                big_x,
                f,
                starred,
                points,
                output,
                summary,
                no_timestamp,
            },
            &tables,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("smooth-rough: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
