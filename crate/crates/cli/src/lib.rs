//! Command-line front-end: run sessions, reproduce the probability tables
//! and information curves, and report control-mode detection statistics.
//! All commands are deterministic in their flags and seed; file outputs get
//! a sibling `<path>.manifest.json` recording the resolved run.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod format;
mod manifest;

pub use format::fmt_f64;

/// Environment variable consulted when `--seed` is not given.
pub const SEED_ENV_VAR: &str = "MBQKD_SEED";
/// Seed used when neither the flag nor the environment provides one.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "mbqkd",
    version,
    about = "Mixed-basis two-qubit QKD: session simulator and security-analysis toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a full Alice-Bob session and write the round transcript.
    Simulate(SimulateArgs),
    /// Emit a joint-probability table p(j, k, m), closed form and optionally
    /// Monte Carlo.
    Table(TableArgs),
    /// Emit the mutual-information curves I_AB(x) and I_AE(x) on a grid.
    MiCurve(MiCurveArgs),
    /// Report control-mode detection-escape probabilities.
    Detect(DetectArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Toggle {
    On,
    Off,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TranscriptFormat {
    Jsonl,
    Csv,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of protocol rounds.
    #[arg(long)]
    pub rounds: u64,
    /// Eve's presence X in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub eve_presence: f64,
    /// Enable or disable the intercept-resend attack.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub attack: Toggle,
    /// RNG seed (defaults to $MBQKD_SEED, then 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Transcript output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Transcript format: one record per line.
    #[arg(long, value_enum, default_value_t = TranscriptFormat::Jsonl)]
    pub format: TranscriptFormat,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// Which table: 1 (no plates inserted) or 2 (both plates inserted).
    #[arg(long)]
    pub which: u8,
    /// Eve's presence X in [0, 1].
    #[arg(long)]
    pub x: f64,
    /// Rounds for the Monte-Carlo columns (omitted: closed form only).
    #[arg(long)]
    pub rounds: Option<u64>,
    /// RNG seed (defaults to $MBQKD_SEED, then 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MiCurveArgs {
    /// Left end of the presence grid.
    #[arg(long, default_value_t = 0.0)]
    pub x_start: f64,
    /// Right end of the presence grid.
    #[arg(long, default_value_t = 1.0)]
    pub x_end: f64,
    /// Number of grid points (endpoints included).
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    /// Session rounds per grid point for the Monte-Carlo columns.
    #[arg(long)]
    pub rounds: Option<u64>,
    /// RNG seed (defaults to $MBQKD_SEED, then 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Report the closed-form escape probability after this many 4-message
    /// control cycles.
    #[arg(long)]
    pub cycles: Option<u32>,
    /// Report the closed-form escape probability after this many characters
    /// (8 bits each).
    #[arg(long)]
    pub characters: Option<u32>,
    /// Control cycles to simulate for the Monte-Carlo estimate.
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Eve's presence during the simulated cycles.
    #[arg(long, default_value_t = 1.0)]
    pub eve_presence: f64,
    /// RNG seed (defaults to $MBQKD_SEED, then 1).
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Command failure, split by exit code: flag problems exit 2, runtime
/// problems exit 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub(crate) fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub(crate) fn runtime(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(err.into())
}

/// Resolves the seed: flag, then `$MBQKD_SEED`, then the default.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| validation(format!("{SEED_ENV_VAR} must be an unsigned integer, got {raw:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> CliResult {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(validation(format!("--{name} must lie in [0, 1], got {value}")))
    }
}

/// Runs a parsed command, sending primary stdout-bound output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Simulate(args) => commands::simulate(args, out),
        Command::Table(args) => commands::table(args, out),
        Command::MiCurve(args) => commands::mi_curve(args, out),
        Command::Detect(args) => commands::detect(args, out),
    }
}
