use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use majsim::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let result = run(&cli, &mut lock);
    let _ = lock.flush();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("majsim: checks failed (see output)");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("majsim: {e}");
            ExitCode::FAILURE
        }
    }
}
