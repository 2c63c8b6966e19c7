fn main() {
    env_logger::init();
    std::process::exit(spinmodes::cli::run(std::env::args_os()));
}
