fn main() {
    std::process::exit(akr::cli::run(std::env::args_os()));
}
