fn main() {
    std::process::exit(drift_fx_cli::main_with(std::env::args_os()));
}
