fn main() {
    std::process::exit(thermistor_cli::main_with_args(std::env::args_os()));
}
