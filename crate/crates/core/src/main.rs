use clap::Parser;

fn main() {
    let cli = iccn::cli::Cli::parse();
    if let Err(e) = iccn::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
