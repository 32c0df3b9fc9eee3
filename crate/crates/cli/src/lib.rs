//! Front end for the `gaplab` binary: config loading, result bundles and
//! the subcommands.

pub mod bundle;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;

pub use cli::{Cli, Command};
pub use error::{exit, CliError, CliResult};

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Bounds(a) => commands::bounds::run(&a, out),
        Command::Run(a) => commands::run::run(&a, out, err),
        Command::Sample(a) => commands::sample::run(&a, out),
        Command::Verify(a) => commands::verify::run(&a, out),
        Command::Report(a) => commands::report::run(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
