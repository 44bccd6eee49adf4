fn main() {
    std::process::exit(rmod::cli::main());
}
