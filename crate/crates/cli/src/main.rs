use clap::Parser;

fn main() {
    let cli = stein_lab_cli::Cli::parse();
    std::process::exit(stein_lab_cli::run(&cli));
}
