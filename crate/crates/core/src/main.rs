use clap::Parser;

fn main() {
    std::process::exit(qforge::cli::main_with(qforge::cli::Args::parse()));
}
