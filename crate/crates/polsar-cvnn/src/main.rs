fn main() {
    std::process::exit(polsar_cvnn::cli::run());
}
