fn main() {
    std::process::exit(cqed::cli::main_with_args(std::env::args_os()));
}
