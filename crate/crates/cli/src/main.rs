fn main() {
    std::process::exit(prodstate_cli::run(std::env::args_os()));
}
