fn main() {
    std::process::exit(ifolab::cli::main_with_args(std::env::args_os()));
}
