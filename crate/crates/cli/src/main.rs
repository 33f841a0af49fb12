//! `decoy-synth`: validate and generate attack-graph instances, run the
//! no-decoy / decoy / decoy-action scenarios, evaluate saved strategies and
//! time synthesis across grid sizes.

mod args;
mod commands;
mod manifest;
mod report;

use std::process::ExitCode;

use clap::Parser;
use decoy_synth_core::Error as CoreError;

use args::{Cli, Command};

/// Stable exit codes.
const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_OTHER: u8 = 1;

/// A failure tagged with how it maps onto an exit code.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Infeasible(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    pub fn input(err: impl Into<anyhow::Error>) -> Self {
        Failure::Input(err.into())
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Infeasible(_) => Failure::Infeasible(err.into()),
            CoreError::InvalidInput(_) | CoreError::Parse { .. } => Failure::Input(err.into()),
            CoreError::TooLarge(_) | CoreError::Numerical(_) => Failure::Other(err.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Input(err.into())
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DECOY_SYNTH_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Infeasible(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_OTHER)
        }
    }
}
