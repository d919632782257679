use clap::Parser;

fn main() {
    let cli = lamperti::cli::Cli::parse();
    std::process::exit(lamperti::cli::run(cli));
}
