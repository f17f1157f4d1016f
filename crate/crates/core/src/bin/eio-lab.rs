fn main() {
    std::process::exit(eio_lab::cli::main_from_env());
}
