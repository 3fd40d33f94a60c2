use clap::Parser;

fn main() {
    let cli = nfvel_cli::Cli::parse();
    std::process::exit(nfvel_cli::run(&cli));
}
