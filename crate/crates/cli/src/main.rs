fn main() {
    std::process::exit(paydev_cli::run(std::env::args_os()));
}
