use std::process::ExitCode;

use clap::Parser;
use kklab::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kklab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
