fn main() {
    std::process::exit(fptmc::cli::main());
}
