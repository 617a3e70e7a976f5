use clap::Parser;

fn main() {
    let cli = critevo_runner::cli::Cli::parse();
    if let Err(e) = critevo_runner::cli::run(cli) {
        eprintln!("critevo: {e}");
        std::process::exit(e.exit_code());
    }
}
