use std::process::ExitCode;

use clap::Parser;
use mswave_shell::commands::{dispatch, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mswave: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
