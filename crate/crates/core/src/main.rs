fn main() {
    std::process::exit(peakgan::cli::run(std::env::args_os()));
}
