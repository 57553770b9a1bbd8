fn main() {
    std::process::exit(trajvgmm::cli::run_from_args(std::env::args_os()));
}
