fn main() {
    std::process::exit(crackfront::cli::run(std::env::args_os()));
}
