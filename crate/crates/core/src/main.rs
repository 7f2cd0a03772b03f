fn main() {
    std::process::exit(ragq::pipeline::cli::run());
}
