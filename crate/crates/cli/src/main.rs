fn main() {
    std::process::exit(leontief_cli::main_with_args(std::env::args_os()));
}
