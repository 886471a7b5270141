use clap::Parser;

fn main() {
    std::process::exit(ellipsis_cli::run(ellipsis_cli::Cli::parse()));
}
