fn main() {
    std::process::exit(healthcast::cli::run(std::env::args_os()));
}
