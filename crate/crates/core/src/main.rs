use clap::Parser;

use casimir_trace::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = execute(&cli) {
        eprintln!("casimir-trace: {err}");
        std::process::exit(err.exit_code());
    }
}
