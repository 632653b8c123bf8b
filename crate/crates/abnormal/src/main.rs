fn main() {
    std::process::exit(abnormal::cli::run(std::env::args_os()));
}
