fn main() {
    std::process::exit(plurilag::cli::main_with_env());
}
