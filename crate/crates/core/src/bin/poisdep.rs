fn main() {
    std::process::exit(poisdep::cli::run(std::env::args_os()));
}
