fn main() {
    std::process::exit(twpa::cli::main());
}
