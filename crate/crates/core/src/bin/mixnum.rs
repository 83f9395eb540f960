fn main() {
    std::process::exit(mixnum::cli::run(std::env::args_os()));
}
