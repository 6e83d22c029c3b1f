fn main() {
    std::process::exit(smallnoise::cli::run(std::env::args_os()));
}
