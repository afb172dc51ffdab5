//! Command-line front end for the `qcert` library.

pub mod args;
pub mod commands;
pub mod error;
pub mod state_file;

use std::io::Write;

use args::{Cli, Command, LowerboundCommand};
pub use error::{exit, CliError, CliResult};

/// Dispatch a parsed command line; human-readable output goes to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Certify(a) => commands::certify(a, out),
        Command::Analyze(a) => commands::analyze(a, out),
        Command::Dtbasis(a) => commands::dtbasis(a, out),
        Command::Lowerbound(LowerboundCommand::Gen(a)) => commands::lowerbound_gen(a, out),
        Command::Lowerbound(LowerboundCommand::Tv(a)) => commands::lowerbound_tv(a, out),
        Command::Lowerbound(LowerboundCommand::Claim(a)) => commands::lowerbound_claim(a, out),
    }
}
