fn main() {
    std::process::exit(eb_risk::cli::main_with_args(std::env::args_os()));
}
