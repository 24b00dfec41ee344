fn main() {
    std::process::exit(hybrid_asm::cli::main());
}
