use std::process::ExitCode;

use std::io;

use clap::Parser;
use pgrid::cli::{configure_threads, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = configure_threads().and_then(|()| run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe is not a failure of the computation
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pgrid: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
