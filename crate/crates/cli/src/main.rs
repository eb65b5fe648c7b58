//! `mocg`: solve, compare, multistart and self-check from JSON configs.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "mocg", version, about = "Multiobjective conjugate gradient methods without line search")]
struct Cli {
    /// Run configuration (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for report files
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the configuration
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Only print errors and failing checks
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solve; writes a JSON report and a CSV trajectory
    Solve,
    /// Run the fixed stepsize and the line-search baseline from the same start
    Compare,
    /// Multistart front approximation; writes a front CSV and a summary JSON
    Pareto,
    /// Run the invariant suites
    Check {
        /// `all` or one of: problem, subproblem, stepsize, directions, solver
        #[arg(default_value = "all")]
        scope: String,
        /// Add a known-bad fixture problem to the gradient checks
        #[arg(long = "fixture", value_name = "NAME")]
        fixtures: Vec<String>,
    },
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let ctx = Ctx {
        out: &cli.out,
        quiet: cli.quiet,
    };
    let load = || {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage("--config PATH is required for this command".into()))?;
        config::load(path, cli.seed)
    };
    match &cli.command {
        Command::Solve => commands::solve_cmd(&load()?, &ctx),
        Command::Compare => commands::compare_cmd(&load()?, &ctx),
        Command::Pareto => commands::pareto_cmd(&load()?, &ctx),
        Command::Check { scope, fixtures } => commands::check_cmd(scope, fixtures, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
