fn main() {
    std::process::exit(breather_lab::cli::run(std::env::args().collect()));
}
