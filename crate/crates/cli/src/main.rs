fn main() {
    std::process::exit(antiito_cli::main_with_args(std::env::args_os()));
}
