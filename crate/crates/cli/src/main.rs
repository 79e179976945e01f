fn main() {
    std::process::exit(glassy_cli::run(std::env::args_os()));
}
