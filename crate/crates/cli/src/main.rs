fn main() {
    std::process::exit(micropolar_cli::run(std::env::args_os()));
}
