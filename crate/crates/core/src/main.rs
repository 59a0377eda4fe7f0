fn main() {
    std::process::exit(eskel::cli::run(std::env::args_os()));
}
