use clap::Parser;

fn main() {
    let cli = linf_cli::Cli::parse();
    if let Err(error) = linf_cli::run(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
