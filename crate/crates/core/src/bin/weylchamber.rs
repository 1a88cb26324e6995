fn main() {
    std::process::exit(weylchamber::cli::run(std::env::args_os()));
}
