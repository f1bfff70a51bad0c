fn main() {
    std::process::exit(twc_core::cli::run(std::env::args_os()));
}
