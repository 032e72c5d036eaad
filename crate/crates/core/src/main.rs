use clap::Parser;

fn main() {
    let cli = linkx::cli::Cli::parse();
    if let Err(err) = linkx::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(linkx::cli::exit_code(&err));
    }
}
