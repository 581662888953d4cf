fn main() {
    std::process::exit(qhj_core::cli::main());
}
