fn main() {
    std::process::exit(m2a_cli::run(std::env::args_os()));
}
