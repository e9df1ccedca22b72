//! Command-line front end: configuration loading and subcommand dispatch.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::Failure;
use crate::config::{ConfigError, DistributionSpec, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "leontief", version, about = "Optimal mechanisms for perfect-complement buyers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check positivity and normalization of the distribution.
    Validate,
    /// Evaluate conditions A, B and B'.
    Conditions,
    /// Build the optimal mechanism; write its JSON and price curve.
    Solve,
    /// Direct and characterization incentive checks on a mechanism file.
    Verify,
    /// Expected revenue by payments and by virtual surplus.
    Revenue,
    /// Pointwise bound and threshold oracle for the solved mechanism.
    Certify,
    /// Price and zero curves over the ratio grid.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltIn {
    Uniform,
    Example1,
    Example2,
}

/// Overrides for keys of the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Verify mesh side.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub kfloor: Option<f64>,
    /// Incentive-check tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Built-in distribution, replacing the config's.
    #[arg(long, global = true, value_enum)]
    pub family: Option<BuiltIn>,
    /// Mechanism JSON for `verify` and `revenue`.
    #[arg(long, global = true)]
    pub mechanism: Option<PathBuf>,
}

impl Flags {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        if let Some(x) = &self.out {
            cfg.out = x.clone();
        }
        if let Some(x) = self.grid {
            cfg.grid = x;
        }
        if let Some(x) = self.kfloor {
            cfg.k_floor = x;
        }
        if let Some(x) = self.tol {
            cfg.tol = x;
        }
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        if let Some(f) = self.family {
            cfg.distribution = match f {
                BuiltIn::Uniform => DistributionSpec::Uniform,
                BuiltIn::Example1 => DistributionSpec::Example1,
                BuiltIn::Example2 => DistributionSpec::Example2,
            };
        }
        if let Some(x) = &self.mechanism {
            cfg.mechanism = Some(x.clone());
        }
        Ok(cfg)
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub fn run(command: Command, cfg: &RunConfig) -> Result<String, Failure> {
    match command {
        Command::Validate => commands::validate(cfg),
        Command::Conditions => commands::conditions(cfg),
        Command::Solve => commands::solve_cmd(cfg),
        Command::Verify => commands::verify(cfg),
        Command::Revenue => commands::revenue(cfg),
        Command::Certify => commands::certify_cmd(cfg),
        Command::Sweep => commands::sweep(cfg),
    }
}

/// Parses arguments, runs the command, prints its report; returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match cli.flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(cli.command, &cfg) {
        Ok(text) => {
            print_report(&text);
            EXIT_PASS
        }
        Err(Failure::Verdict(text)) => {
            print_report(&text);
            EXIT_VERDICT
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn print_report(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
