//! `podkit` command-line pipeline.
//!
//! Exit status: 0 when every check passes, 1 when at least one inequality or
//! bound is violated (reports are still written), 2 on usage, I/O or
//! argument errors.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Outcome;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
