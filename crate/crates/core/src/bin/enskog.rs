fn main() {
    std::process::exit(enskog::cli::run(std::env::args_os()));
}
