fn main() {
    std::process::exit(tfkan::cli::run(std::env::args_os()));
}
