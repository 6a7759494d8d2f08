fn main() {
    std::process::exit(streamcover::cli::run(std::env::args_os()));
}
