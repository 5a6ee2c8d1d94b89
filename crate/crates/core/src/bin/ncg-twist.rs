fn main() {
    std::process::exit(ncg_twist::cli::main_with_args(std::env::args_os()));
}
