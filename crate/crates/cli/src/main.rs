use std::process::ExitCode;

use clap::Parser;
use qshrink_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(m) => {
            for n in &m.notes {
                eprintln!("note: {n}");
            }
            let dir = &m.config.out_dir;
            eprintln!("{}: wrote {} in {}", m.command, m.outputs.join(", "), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
