//! Command-line front end: config ingestion, experiment orchestration, and
//! CSV emission for the bound sweeps, gain grids, Monte Carlo runs, and
//! design tables.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod csvout;

/// Errors surfaced to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration could not be parsed or validated (exit 2).
    Config(String),
    /// Query infeasible or no computable rows (exit 3).
    Infeasible(String),
    /// I/O failure (exit 1).
    Io(io::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nfvel",
    version,
    about = "Velocity-estimation bounds and Monte Carlo experiments for near-field modular linear arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial/transverse velocity CRBs over a distance grid, per array
    Crb(RunArgs),
    /// Worst-case beamforming gain over a velocity-mismatch grid
    Gain(RunArgs),
    /// Monte Carlo MSE of the ML velocity estimator against the CRBs
    Mse(RunArgs),
    /// Antenna-saving design rule: matched inter-module separation
    Design(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Crb(a) | Command::Gain(a) | Command::Mse(a) | Command::Design(a) => a,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML experiment configuration; built-in defaults apply when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Write CSV to this path instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Override the Monte Carlo base seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for parallel sweeps (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,

    /// Compute only the exact (brute-force) columns
    #[arg(long, conflicts_with = "closed_only")]
    pub exact_only: bool,

    /// Compute only the closed-form columns
    #[arg(long)]
    pub closed_only: bool,
}

/// Column-selection and seed overrides passed down to the commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub exact_only: bool,
    pub closed_only: bool,
    pub seed: Option<u64>,
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nfvel: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command line, propagating errors.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            config::resolve(&text)?
        }
        None => config::resolve_default()?,
    };
    let opts = RunOptions {
        exact_only: args.exact_only,
        closed_only: args.closed_only,
        seed: args.seed,
    };

    let body = || -> Result<(), CliError> {
        match (&cli.command, &args.out) {
            (Command::Design(_), out) => {
                // table to one stream, CSV to the other
                match out {
                    Some(path) => {
                        let file = io::BufWriter::new(fs::File::create(path)?);
                        commands::design::run(&cfg, &opts, file, io::stdout().lock())
                    }
                    None => commands::design::run(&cfg, &opts, io::stdout().lock(), io::stderr().lock()),
                }
            }
            (command, Some(path)) => {
                let file = io::BufWriter::new(fs::File::create(path)?);
                dispatch(command, &cfg, &opts, file)
            }
            (command, None) => dispatch(command, &cfg, &opts, io::stdout().lock()),
        }
    };

    match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(body)
        }
        None => body(),
    }
}

fn dispatch<W: Write>(
    command: &Command,
    cfg: &config::ResolvedConfig,
    opts: &RunOptions,
    out: W,
) -> Result<(), CliError> {
    match command {
        Command::Crb(_) => commands::crb::run(cfg, opts, out),
        Command::Gain(_) => commands::gain::run(cfg, opts, out),
        Command::Mse(_) => commands::mse::run(cfg, opts, out),
        Command::Design(_) => unreachable!("design handled by execute"),
    }
}
