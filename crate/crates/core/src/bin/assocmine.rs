fn main() {
    std::process::exit(assocmine::cli::main_with_args(std::env::args_os()));
}
