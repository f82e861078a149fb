fn main() {
    std::process::exit(cars_qfi::cli::main_with_args(std::env::args_os()));
}
