fn main() {
    std::process::exit(sqrtpoly::cli::run(std::env::args()))
}
