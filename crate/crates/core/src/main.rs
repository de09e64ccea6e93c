fn main() {
    std::process::exit(trajnet::cli::run(std::env::args_os()));
}
