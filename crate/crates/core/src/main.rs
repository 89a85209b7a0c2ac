fn main() {
    std::process::exit(tdc::cli::run(std::env::args_os()));
}
