//! Command-line front end: argument parsing, file output and plotting.

pub mod args;
pub mod commands;
pub mod output;
pub mod svg;

use anyhow::Result;

use args::{Cli, Command};

/// Process exit status for a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// The run completed but a check it performs failed.
    ChecksFailed,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.workers {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Attr(a) => commands::attr(a)?,
        Command::Eval(a) => commands::eval(a)?,
        Command::BaselineSweep(a) => commands::baseline_sweep(a)?,
        Command::Occlude(a) => commands::occlude(a)?,
        Command::Cos(a) => commands::cos(a)?,
        Command::Synth(a) => commands::synth(a)?,
        Command::Validate(a) => {
            if !commands::validate(a)? {
                return Ok(Outcome::ChecksFailed);
            }
        }
        Command::Plot(a) => commands::plot(a)?,
    }
    Ok(Outcome::Ok)
}

/// Engine error code behind `err`, if any.
pub fn error_code(err: &anyhow::Error) -> Option<&'static str> {
    err.chain()
        .find_map(|e| e.downcast_ref::<compass_core::Error>())
        .map(compass_core::Error::code)
}
