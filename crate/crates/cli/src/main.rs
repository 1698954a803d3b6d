use std::process::ExitCode;

use clap::Parser;
use compass_cli::args::Cli;
use compass_cli::{error_code, run, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => match error_code(&e) {
            Some(code) => {
                eprintln!("error[{code}]: {e:#}");
                ExitCode::from(2)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
