fn main() {
    std::process::exit(qentcap::cli::main());
}
