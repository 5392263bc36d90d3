fn main() {
    std::process::exit(conewidth::cli::run(std::env::args_os()));
}
