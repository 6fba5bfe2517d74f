fn main() {
    std::process::exit(sgdsvm::cli::run(std::env::args_os()));
}
