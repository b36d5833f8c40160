fn main() {
    std::process::exit(thinthick::app::cli::main_with_args(std::env::args_os()));
}
