use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TWOGRID_LOG", "warn")).init();
    let cli = twogrid::cli::Cli::parse();
    std::process::exit(twogrid::cli::run(cli));
}
