fn main() {
    std::process::exit(efimov::cli::run());
}
