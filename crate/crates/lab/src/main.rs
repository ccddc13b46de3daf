fn main() {
    std::process::exit(abclab::cli::main_with(std::env::args_os()));
}
