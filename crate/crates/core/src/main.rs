fn main() {
    std::process::exit(coreq::cli::run(std::env::args_os()));
}
