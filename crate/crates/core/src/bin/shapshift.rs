use clap::Parser;

fn main() {
    std::process::exit(shapshift::cli::run(shapshift::cli::Cli::parse()));
}
