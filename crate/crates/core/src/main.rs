fn main() {
    std::process::exit(logharmonic::cli::run());
}
