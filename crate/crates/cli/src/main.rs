use clap::Parser;
use pspec_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("pspec: {e}");
        std::process::exit(e.exit_code());
    }
}
