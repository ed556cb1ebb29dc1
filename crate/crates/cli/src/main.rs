use clap::Parser;
use raman_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli, std::env::vars()));
}
