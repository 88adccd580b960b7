fn main() {
    std::process::exit(tsscreen::cli::main_with_args(std::env::args_os()));
}
