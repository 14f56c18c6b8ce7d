fn main() {
    std::process::exit(infoutil::cli::run(std::env::args_os()));
}
