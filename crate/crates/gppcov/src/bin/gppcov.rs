fn main() {
    std::process::exit(gppcov::cli::run());
}
