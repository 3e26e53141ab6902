fn main() {
    std::process::exit(regscan::cli::run());
}
