fn main() {
    std::process::exit(ietlab_cli::cli::main_with(std::env::args_os()));
}
