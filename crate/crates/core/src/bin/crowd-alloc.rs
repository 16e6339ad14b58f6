fn main() {
    std::process::exit(crowd_alloc::cli::run(std::env::args_os()));
}
