fn main() {
    std::process::exit(ffmoments_cli::main_with(std::env::args_os()));
}
