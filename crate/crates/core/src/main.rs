fn main() {
    std::process::exit(polar_rateless::harness::cli::main());
}
