fn main() {
    std::process::exit(tripletflow_cli::main_with_args(std::env::args_os()));
}
