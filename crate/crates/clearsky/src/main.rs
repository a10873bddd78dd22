fn main() {
    std::process::exit(clearsky::cli::main_with_args(std::env::args().collect()));
}
