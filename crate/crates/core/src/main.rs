fn main() {
    std::process::exit(sigma_alloc::cli::main_with_args(std::env::args_os()));
}
