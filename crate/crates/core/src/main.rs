use std::io;
use std::process::ExitCode;

use clap::Parser;
use screenlab::cli::{run, Cli};
use screenlab::exec::configure_threads;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SCREENLAB_THREADS").ok().and_then(|v| v.parse().ok()) {
        configure_threads(n);
    }
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
