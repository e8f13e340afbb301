fn main() {
    std::process::exit(qrag_cli::main_with_args(std::env::args_os()));
}
