fn main() {
    std::process::exit(finite_gap::cli::main_with(std::env::args_os()));
}
