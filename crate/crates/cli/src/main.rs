use std::process::ExitCode;

use clap::Parser;
use hetdet_cli::{commands, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.resolve().and_then(|run| commands::execute(&run)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hetdet: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
