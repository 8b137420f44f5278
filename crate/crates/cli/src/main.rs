fn main() {
    std::process::exit(etakepler_cli::run(std::env::args_os()));
}
