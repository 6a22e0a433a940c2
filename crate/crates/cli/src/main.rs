fn main() {
    std::process::exit(maprast_cli::run(std::env::args_os()));
}
