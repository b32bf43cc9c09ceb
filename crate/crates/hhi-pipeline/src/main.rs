fn main() {
    std::process::exit(hhi_pipeline::cli::run());
}
