fn main() {
    std::process::exit(collarflow::cli::main_with_args(std::env::args().collect()));
}
