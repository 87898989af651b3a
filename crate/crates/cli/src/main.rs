mod cli;
mod commands;
mod output;

use clap::Parser;

fn main() {
    let parsed = cli::Cli::parse();
    std::process::exit(commands::dispatch(parsed));
}
