//! The `gauss-cardinal` command line tool.
//!
//! Every command writes one JSON envelope with the sections `command`,
//! `inputs`, `outputs` and `timing`. Only `timing` varies between runs with
//! identical arguments in exact mode.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod report;
pub mod samples;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_PRECISION: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

/// Environment variable capping precision escalation, in mantissa bits.
pub const MAX_BITS_ENV: &str = "GAUSS_CARDINAL_MAX_BITS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Precision(String),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Precision(_) => EXIT_PRECISION,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<gauss_cardinal::Error> for CliError {
    fn from(e: gauss_cardinal::Error) -> Self {
        use gauss_cardinal::Error as E;
        match e {
            E::InvalidInput(_) | E::Domain(_) | E::ExactMode(_) => CliError::Usage(e.to_string()),
            E::PrecisionExhausted { .. } => CliError::Precision(e.to_string()),
            E::Singular(_) => CliError::Internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gauss-cardinal", version, about = "Gaussian cardinal interpolation on the integer lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Determinant of the square system by the closed form and by elimination
    Det(DetArgs),
    /// Solve for the node-function coefficients d_{-n..n}
    NodeFn(NodeFnArgs),
    /// Interpolate integer samples read from a CSV file
    Interpolate(InterpolateArgs),
    /// Cross-check the determinant, palindrome and solver identities over a sweep
    Verify(VerifyArgs),
    /// Conditioning report and required precision
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ShiftArgs {
    /// q = exp(-1/(2 sigma^2)) as a ratio p/r or decimal in (0, 1)
    #[arg(long)]
    pub q: Option<String>,
    /// Gaussian width sigma > 0
    #[arg(long)]
    pub sigma: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `exact` or a mantissa width in bits (at least 53)
    #[arg(long, default_value = "256")]
    pub precision: String,
    /// Write the JSON envelope here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DetArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub shift: ShiftArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Coefficients d_k for |k| <= n
    #[arg(long)]
    pub n: usize,
    /// Node conditions for |j| <= m (defaults to n)
    #[arg(long)]
    pub m: Option<usize>,
    #[command(flatten)]
    pub shift: ShiftArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Exit with status 4 instead of reporting an unverified result
    #[arg(long)]
    pub strict: bool,
    /// Evaluation grid `xmin:xmax:count`
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Write the evaluated curve as `x,value` CSV
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Write the coefficients as `index,value` CSV
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NodeFnArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// dense, folded, closed, or all
    #[arg(long, default_value = "all")]
    pub method: String,
}

#[derive(Debug, Clone, Args)]
pub struct InterpolateArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// dense, folded or closed
    #[arg(long, default_value = "folded")]
    pub method: String,
    /// CSV with `index,value` rows
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Largest order in the sweep
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    /// Values of q, repeated or comma separated
    #[arg(long = "q", value_delimiter = ',')]
    pub q: Vec<String>,
    /// `exact` or a mantissa width in bits
    #[arg(long, default_value = "exact")]
    pub precision: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub shift: ShiftArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::execute(&cli.command) {
        Ok(done) => {
            if let Err(e) = emit(&done.envelope, done.output.as_ref()) {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            if let Some(summary) = &done.summary {
                eprint!("{summary}");
            }
            done.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(envelope: &serde_json::Value, output: Option<&PathBuf>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(envelope)
        .map_err(|e| CliError::Internal(format!("serializing output: {e}")))?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(format!("writing stdout: {e}"))),
    }
}
