fn main() {
    std::process::exit(gauss_cardinal_cli::run(std::env::args_os()));
}
