fn main() {
    std::process::exit(nvtherm::cli::main_with_args(std::env::args_os()));
}
