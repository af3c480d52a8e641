fn main() {
    std::process::exit(revkde::cli::main_with_args(std::env::args_os()));
}
