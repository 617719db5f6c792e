use clap::Parser;
use swarmsim::cli;

fn main() {
    let parsed = cli::Cli::parse();
    std::process::exit(cli::dispatch(parsed));
}
