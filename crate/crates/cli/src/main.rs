fn main() {
    std::process::exit(footprint_cli::run(std::env::args_os()));
}
