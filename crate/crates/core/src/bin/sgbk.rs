fn main() {
    std::process::exit(sgbk_core::cli::run(std::env::args_os()));
}
