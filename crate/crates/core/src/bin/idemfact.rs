fn main() {
    std::process::exit(idemfact_core::cli::run());
}
