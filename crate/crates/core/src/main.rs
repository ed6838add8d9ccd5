fn main() {
    std::process::exit(polcap::cli::run(std::env::args_os()));
}
