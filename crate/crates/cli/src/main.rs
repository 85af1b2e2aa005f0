fn main() {
    std::process::exit(evbias_cli::run(std::env::args_os()));
}
