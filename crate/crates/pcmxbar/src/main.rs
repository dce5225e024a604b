fn main() {
    std::process::exit(pcmxbar::cli::run(std::env::args_os()));
}
