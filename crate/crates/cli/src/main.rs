use clap::Parser;

fn main() {
    let cli = halfspace_cli::Cli::parse();
    let code = match halfspace_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
