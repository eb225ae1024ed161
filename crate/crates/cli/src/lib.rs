//! Command-line front end for `pubshare-core`.
//!
//! [`run`] parses arguments, dispatches to a verb and maps the result to an
//! exit code: 0 on success, 1 on a runtime failure, 2 on a usage error.

pub mod args;
mod check;
mod commands;
mod output;
mod reproduce;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command, Common, MechSpec, Solver, Table};
pub use commands::{train_config, TrainFlags, DEFAULT_N, DEFAULT_SAMPLES, DEFAULT_SEED};
pub use output::{render_csv, RunInfo, SCHEMA_VERSION};
pub use reproduce::TABLE_SAMPLES;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

pub fn dispatch(command: &Command) -> anyhow::Result<()> {
    match command {
        Command::Eval { common, mech, offer } => commands::eval(common, mech, *offer),
        Command::Solve { solver, common, artifact } => commands::solve(common, *solver, artifact.as_deref()),
        Command::Bound { common } => commands::bound(common),
        Command::Train { common, init, rounds, cost, config, checkpoint } => {
            let flags = TrainFlags {
                init: *init,
                rounds: *rounds,
                cost: *cost,
                config: config.as_deref(),
                checkpoint: checkpoint.as_deref(),
            };
            commands::train_cmd(common, &flags)
        }
        Command::Reproduce { table, common } => reproduce::run(*table, common),
        Command::Check { common } => check::run(common),
    }
}
