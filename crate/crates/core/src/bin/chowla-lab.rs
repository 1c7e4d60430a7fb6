fn main() {
    std::process::exit(chowla_lab::cli::main_with_args(std::env::args_os()));
}
