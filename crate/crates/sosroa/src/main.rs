fn main() {
    std::process::exit(sosroa::cli::run());
}
