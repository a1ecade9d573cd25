fn main() {
    std::process::exit(ptfens::cli::main());
}
