use clap::Parser;

fn main() {
    let cli = lsm_imaging::cli::Cli::parse();
    std::process::exit(lsm_imaging::cli::run(cli));
}
