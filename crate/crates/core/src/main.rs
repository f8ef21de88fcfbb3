fn main() {
    std::process::exit(specdim::cli::run(std::env::args_os()));
}
