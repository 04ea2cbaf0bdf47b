use clap::Parser;
use robust_sidelobe::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
