fn main() {
    std::process::exit(structured_ginibre::cli::main());
}
