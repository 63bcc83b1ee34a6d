use clap::Parser;

fn main() {
    let args = propchaos::cli::Args::parse();
    std::process::exit(propchaos::cli::main_with(args));
}
