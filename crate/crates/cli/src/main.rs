use clap::Parser;

fn main() {
    let cli = gap_cli::Cli::parse();
    let code = gap_cli::execute(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
