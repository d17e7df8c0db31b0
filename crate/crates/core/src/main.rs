fn main() {
    std::process::exit(fhash::cli::run_from(std::env::args_os()));
}
