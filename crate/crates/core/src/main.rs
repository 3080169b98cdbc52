use clap::Parser;

fn main() {
    let cli = lyapda::cli::Cli::parse();
    let code = lyapda::cli::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
