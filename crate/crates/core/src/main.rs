fn main() {
    std::process::exit(hifsig::cli::run(std::env::args_os()));
}
