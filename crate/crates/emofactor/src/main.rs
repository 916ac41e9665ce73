fn main() {
    std::process::exit(emofactor::cli::main_with_args(std::env::args_os()));
}
