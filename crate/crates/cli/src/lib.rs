//! Library half of the `idm` command-line tool.
//!
//! [`run`] turns parsed arguments into a [`report::RunReport`]; the binary
//! only handles printing and exit codes.

use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use idm_core::IdmError;

mod commands;
pub mod input;
pub mod report;

pub use report::RunReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Compute(#[from] IdmError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Compute(_) => "compute",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

/// `{"error":{"kind":...,"message":...}}`
pub fn error_json(kind: &str, message: String) -> String {
    report::to_canonical_json(&ErrorReport { error: ErrorBody { kind, message } })
}

#[derive(Debug, Parser)]
#[command(name = "idm", version, about = "Robust interval estimates under the Imprecise Dirichlet Model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower and upper expected Shannon entropy of a count vector.
    Entropy(EntropyArgs),
    /// Lower and upper expected mutual information of a contingency table.
    Mi(MiArgs),
    /// Credible intervals that hold under every prior in the set.
    Credible(CredibleArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["counts", "table", "input"])))]
pub struct InputArgs {
    /// Comma-separated counts, e.g. `3,6`.
    #[arg(long, value_name = "N,N,...")]
    pub counts: Option<String>,
    /// Contingency table as a JSON array of rows, e.g. `[[2,1],[1,2]]`.
    #[arg(long, value_name = "JSON")]
    pub table: Option<String>,
    /// A `.csv` file of integer rows, or a `.json` file with `counts` or `table` and optional `s`.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Prior strength s > 0. Overrides an `s` in the input file. Default 1.
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report entropies and informations in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
    /// Do not print the summary and warnings on stderr.
    #[arg(long)]
    pub quiet: bool,
    /// Add `wall_time_s` to the report. Reports are then no longer reproducible byte for byte.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleArg {
    Grid(f64),
    MonteCarlo(usize),
}

impl OracleArg {
    fn describe(&self) -> String {
        match self {
            OracleArg::Grid(step) => format!("grid:{step}"),
            OracleArg::MonteCarlo(n) => format!("mc:{n}"),
        }
    }
}

fn parse_oracle(text: &str) -> Result<OracleArg, String> {
    let bad = || format!("expected `grid:STEP` or `mc:N`, got `{text}`");
    match text.split_once(':') {
        Some(("grid", step)) => step.parse().map(OracleArg::Grid).map_err(|_| bad()),
        Some(("mc", n)) => n.parse().map(OracleArg::MonteCarlo).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Brute-force check: `grid:STEP` scans the prior simplex, `mc:N` samples posteriors.
    #[arg(long, value_parser = parse_oracle, value_name = "grid:STEP|mc:N")]
    pub oracle: Option<OracleArg>,
    /// Seed for Monte-Carlo sampling.
    #[arg(long, env = "IDM_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Brute-force check: `grid:STEP` scans product and full prior grids, `mc:N` samples posteriors.
    #[arg(long, value_parser = parse_oracle, value_name = "grid:STEP|mc:N")]
    pub oracle: Option<OracleArg>,
    /// Seed for Monte-Carlo sampling.
    #[arg(long, env = "IDM_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    TwoSided,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatArg {
    Entropy,
    MutualInfo,
    Component(usize),
}

fn parse_stat(text: &str) -> Result<StatArg, String> {
    match text {
        "entropy" => Ok(StatArg::Entropy),
        "mi" => Ok(StatArg::MutualInfo),
        _ => text
            .strip_prefix("component:")
            .and_then(|i| i.parse().ok())
            .map(StatArg::Component)
            .ok_or_else(|| format!("expected `entropy`, `mi` or `component:I`, got `{text}`")),
    }
}

#[derive(Debug, Args)]
pub struct CredibleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Credible level in (0, 1).
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    /// Statistic of the chances: `entropy`, `mi` (needs a table) or `component:I`.
    #[arg(long, value_parser = parse_stat, default_value = "entropy", value_name = "entropy|mi|component:I")]
    pub stat: StatArg,
    /// Posterior samples per prior weight.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Use every point of a simplex grid with this step as prior weights,
    /// instead of the vertices and the center.
    #[arg(long, value_name = "STEP")]
    pub t_grid: Option<f64>,
    #[arg(long, value_enum, default_value = "two-sided")]
    pub mode: ModeArg,
    /// Per-prior intervals from mean and standard deviation instead of sample quantiles.
    #[arg(long)]
    pub gaussian: bool,
    /// Seed for Monte-Carlo sampling.
    #[arg(long, env = "IDM_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Entropy(a) => &a.output,
            Command::Mi(a) => &a.output,
            Command::Credible(a) => &a.output,
        }
    }
}

/// Runs one command. Warnings go into the report's notes.
pub fn run(command: &Command) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let mut report = match command {
        Command::Entropy(args) => commands::entropy(args)?,
        Command::Mi(args) => commands::mi(args)?,
        Command::Credible(args) => commands::credible(args)?,
    };
    if command.output().timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}
