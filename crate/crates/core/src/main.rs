fn main() {
    std::process::exit(clroute::cli::run_from(std::env::args_os()));
}
