use clap::Parser;
use discovery_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("discovery: {e}");
        std::process::exit(e.exit_code());
    }
}
