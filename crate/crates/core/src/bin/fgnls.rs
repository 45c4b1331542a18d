fn main() {
    std::process::exit(fgnls::cli::main_with_args(std::env::args_os()));
}
