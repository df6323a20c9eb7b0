fn main() {
    std::process::exit(torsellab::cli::run_from_args(std::env::args_os()));
}
