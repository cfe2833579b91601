fn main() {
    std::process::exit(pcma::cli::run(std::env::args_os()));
}
