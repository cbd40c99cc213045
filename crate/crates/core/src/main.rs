use clap::Parser;

fn main() {
    let cli = sysvar::cli::Cli::parse();
    std::process::exit(sysvar::cli::main_with(cli));
}
