fn main() {
    std::process::exit(coupled_lab::cli::main_with_args(std::env::args_os()));
}
