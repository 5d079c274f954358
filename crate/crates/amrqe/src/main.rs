fn main() {
    std::process::exit(amrqe::cli::main_with(std::env::args_os()));
}
