fn main() {
    env_logger::init();
    std::process::exit(axlesim::cli::run(std::env::args()));
}
