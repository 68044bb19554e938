use clap::Parser;

fn main() {
    let cli = jim::cli::Cli::parse();
    match jim::cli::run(cli) {
        Ok(output) => print!("{output}"),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
