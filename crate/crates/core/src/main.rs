fn main() {
    std::process::exit(glossforge::cli::run());
}
