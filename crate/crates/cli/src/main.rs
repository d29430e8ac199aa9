//! `fairgain` — command-line front end for the fairness-improvability
//! audit and its companion studies.
//!
//! Subcommands:
//!
//! * `test` — repeated-split audit of a status-quo rule on a CSV dataset;
//! * `sweep` — median p-values over a grid of accuracy/fairness margins;
//! * `simulate-power` — Monte Carlo power curve of the fairness test;
//! * `simulate-game` — split-shopping game, single split vs median-of-K;
//! * `verify-bounds` — closed-form size bound for the median-of-K design;
//! * `gen-data` — synthetic dataset with a deliberately biased status quo;
//! * `milp-check` — exact rule searches vs brute-force enumeration.
//!
//! Every run writes its artifacts plus a `manifest.toml` into `--out`; the
//! manifest is itself a valid `--config` and reproduces the run's artifacts
//! byte for byte at any `--threads` setting.
//!
//! Exit codes say whether the run *completed*, never what it concluded:
//! 0 = ran (verdicts live in the report files), 2 = flag or configuration
//! problem, 3 = dataset problem, 4 = internal failure.

mod commands;
mod configs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure carried to the process boundary; the variant fixes the code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, or config values (exit 2).
    Config(String),
    /// Unreadable or malformed dataset (exit 3).
    Data(String),
    /// The run itself failed past the point of input checking (exit 4).
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fairgain",
    version,
    about = "Tests whether a deployed two-group decision rule could be made fairer at no accuracy cost"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the repeated-split improvability audit on a dataset
    Test(CommonArgs),
    /// Map median p-values over a grid of accuracy and fairness margins
    Sweep(CommonArgs),
    /// Monte Carlo power curve of the fairness component of the test
    SimulatePower(CommonArgs),
    /// Monte Carlo split-shopping game: single-split vs median-of-K audits
    SimulateGame(CommonArgs),
    /// Closed-form size bound for the median-of-K design
    VerifyBounds(CommonArgs),
    /// Generate a synthetic dataset with a deliberately biased status quo
    GenData(CommonArgs),
    /// Cross-check the exact rule searches against brute-force enumeration
    MilpCheck(CommonArgs),
}

impl Cmd {
    fn common(&self) -> &CommonArgs {
        match self {
            Cmd::Test(a)
            | Cmd::Sweep(a)
            | Cmd::SimulatePower(a)
            | Cmd::SimulateGame(a)
            | Cmd::VerifyBounds(a)
            | Cmd::GenData(a)
            | Cmd::MilpCheck(a) => a,
        }
    }
}

/// Flags shared by every subcommand. Flags override config-file keys.
#[derive(Args)]
pub struct CommonArgs {
    /// TOML config file (a previous run's manifest.toml also works)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the config file's random seed
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker-thread count (default: one per CPU); results never depend on it
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..=1024))]
    pub threads: Option<u64>,
    /// Output directory for artifacts and manifest.toml
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: &Cmd) -> Result<(), CliError> {
    let args = cmd.common();
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    std::fs::create_dir_all(&args.out).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            args.out.display()
        ))
    })?;
    match cmd {
        Cmd::Test(a) => commands::test(a),
        Cmd::Sweep(a) => commands::sweep(a),
        Cmd::SimulatePower(a) => commands::simulate_power(a),
        Cmd::SimulateGame(a) => commands::simulate_game(a),
        Cmd::VerifyBounds(a) => commands::verify_bounds(a),
        Cmd::GenData(a) => commands::gen_data(a),
        Cmd::MilpCheck(a) => commands::milp_check(a),
    }
}
