//! Command-line driver: one JSON run manifest in, deterministic CSV and JSON
//! files out.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

use config::RunConfig;
use output::Sink;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// `2` for configuration problems, `1` for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<etakepler::Error> for CliError {
    fn from(e: etakepler::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "etakepler", version, about = "Deformed Kepler-Coulomb system on Taub-NUT space")]
pub struct Cli {
    /// JSON run manifest; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the CSV/JSON outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for random sweeps; overrides the manifest.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the stdout summary.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Closed-form level table.
    Spectrum,
    /// Effective radial potential scan over a family of deformations.
    Effpot,
    /// Classical trajectory with conservation report.
    Simulate,
    /// Integrals, Poisson algebra and operator checks.
    Verify,
    /// Closed-form energies against a finite-difference eigensolver.
    Oracle,
}

/// Everything a command needs besides its own config block.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub sink: Sink,
    pub quiet: bool,
}

impl Context {
    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("etakepler: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let ctx = Context { config, seed, sink: Sink::new(&cli.out)?, quiet: cli.quiet };
    match cli.command {
        Command::Spectrum => commands::spectrum::run(&ctx),
        Command::Effpot => commands::effpot::run(&ctx),
        Command::Simulate => commands::simulate::run(&ctx),
        Command::Verify => commands::verify::run(&ctx),
        Command::Oracle => commands::oracle::run(&ctx),
    }
}
