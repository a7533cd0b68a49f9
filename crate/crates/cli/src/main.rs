//! `qst` — spin-chain state-transfer experiments from JSON configs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Task};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<qst_core::Error> for CliError {
    fn from(e: qst_core::Error) -> Self {
        match e {
            qst_core::Error::Invalid(msg) => CliError::Config(msg),
            qst_core::Error::Numerical(msg) => CliError::Numerical(msg),
        }
    }
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config seed (stochastic tasks).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep groups.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a chain and emit its one-excitation Hamiltonian.
    Build(CommonArgs),
    /// Sample dynamical observables over a time grid.
    Evolve(CommonArgs),
    /// Gap ladder, localization weights and order report.
    Spectrum(CommonArgs),
    /// Single pivot optimization run.
    Optimize(CommonArgs),
    /// Growing-hypercube schedule of pivot runs.
    Schedule(CommonArgs),
    /// Optimize over a grid of lengths, models and parameter counts.
    Sweep(CommonArgs),
    /// Capture best chains at sub-optimal population thresholds.
    Snapshots(CommonArgs),
}

impl Command {
    fn task(&self) -> Task {
        match self {
            Command::Build(_) => Task::Build,
            Command::Evolve(_) => Task::Evolve,
            Command::Spectrum(_) => Task::Spectrum,
            Command::Optimize(_) => Task::Optimize,
            Command::Schedule(_) => Task::Schedule,
            Command::Sweep(_) => Task::Sweep,
            Command::Snapshots(_) => Task::Snapshots,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Build(a)
            | Command::Evolve(a)
            | Command::Spectrum(a)
            | Command::Optimize(a)
            | Command::Schedule(a)
            | Command::Sweep(a)
            | Command::Snapshots(a) => a,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qst", version, about = "Quantum state transfer on engineered spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let task = cli.command.task();
    let args = cli.command.args();

    let config = ExperimentConfig::load(&args.config)?;
    config.validate_for(task, args.seed)?;
    let seed = config.resolved_seed(args.seed);

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", args.out.display())))?;

    match task {
        Task::Build => commands::cmd_build(&config, &args.out),
        Task::Evolve => commands::cmd_evolve(&config, &args.out),
        Task::Spectrum => commands::cmd_spectrum(&config, &args.out),
        Task::Optimize => commands::cmd_optimize(&config, &args.out, seed),
        Task::Schedule => commands::cmd_schedule(&config, &args.out, seed),
        Task::Sweep => commands::cmd_sweep(&config, &args.out, seed, args.threads.max(1)),
        Task::Snapshots => commands::cmd_snapshots(&config, &args.out, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QST_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qst: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
