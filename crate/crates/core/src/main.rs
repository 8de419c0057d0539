fn main() {
    std::process::exit(dqdsim::cli::run(std::env::args_os()));
}
