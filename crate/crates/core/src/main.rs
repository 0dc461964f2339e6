fn main() {
    std::process::exit(shape_extrap::cli::main_with_args(std::env::args_os()));
}
