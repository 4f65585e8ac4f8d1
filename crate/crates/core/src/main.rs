fn main() {
    std::process::exit(tvgan::cli::run(std::env::args_os()));
}
