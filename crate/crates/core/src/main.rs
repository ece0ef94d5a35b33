fn main() {
    std::process::exit(tablink::cli::run(std::env::args_os()));
}
