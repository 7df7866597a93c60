fn main() {
    std::process::exit(aggro::cli::run(std::env::args_os()));
}
