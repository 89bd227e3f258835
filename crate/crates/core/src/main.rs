fn main() {
    std::process::exit(kgrel::cli::main_with_args(std::env::args_os()));
}
