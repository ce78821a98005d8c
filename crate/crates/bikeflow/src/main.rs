use clap::Parser;

fn main() {
    let cli = bikeflow::cli::Cli::parse();
    std::process::exit(bikeflow::cli::run(cli));
}
