//! The `memelabel` command line.

pub mod args;
mod commands;
pub mod error;
pub mod saved;

use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::CliError;

/// Runs one parsed command, writing tables to `out`. Returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a, out),
        Command::Split(a) => commands::split(a, out),
        Command::Annotate(a) => commands::annotate(a, out),
        Command::Consolidate(a) => commands::consolidate(a, out),
        Command::Export(a) => commands::export(a, out),
        Command::Agree(a) => commands::agree(a, out),
        Command::Stats(a) => commands::stats(a, out),
        Command::Eval(a) => commands::eval(a, out),
        Command::Render(a) => commands::render(a, out),
        Command::Serve(a) => commands::serve(a, out),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Usage errors print clap's message and return 2.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_USAGE } else { error::EXIT_OK };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}
