fn main() {
    std::process::exit(hypiso_cli::dispatch(std::env::args_os()));
}
