fn main() {
    std::process::exit(cmrp::cli::run(std::env::args_os()));
}
