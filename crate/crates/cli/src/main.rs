// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::Config;

/// Exit codes: 64 for bad usage, 2 for a condensed Bose gas, 1 for failed
/// computations and suite violations.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Condensed(String),
    Violations(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Condensed(_) => 2,
            Failure::Violations(_) | Failure::Compute(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Condensed(m) | Failure::Violations(m) | Failure::Compute(m) => m,
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("QJ_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("QJ_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Compute(format!("cannot start worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::FreeEnergy(a) => commands::free_energy(&a, &cfg),
        Command::Scan(a) => commands::scan(&a, &cfg),
        Command::Verify(a) => commands::verify(&a, &cfg),
        Command::Fugacity(a) => commands::fugacity(&a, &cfg),
        Command::Exchange(a) => commands::exchange(&a, &cfg),
        Command::Decompose(a) => commands::decompose(&a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qj: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
