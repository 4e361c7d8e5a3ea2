fn main() {
    std::process::exit(lindblad_ep::cli::run(std::env::args_os()));
}
