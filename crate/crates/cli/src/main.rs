fn main() {
    std::process::exit(exciton_spectra_cli::main_with_args(std::env::args_os()));
}
