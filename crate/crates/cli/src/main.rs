fn main() {
    std::process::exit(fracdioph_cli::main_with_args(std::env::args_os()));
}
