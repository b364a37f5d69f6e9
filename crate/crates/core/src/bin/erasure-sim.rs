fn main() {
    std::process::exit(erasure_sim::cli::run(std::env::args_os()));
}
