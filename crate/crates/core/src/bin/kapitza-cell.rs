fn main() {
    std::process::exit(kapitza_cell::cli_io::main_with_args(std::env::args_os()));
}
