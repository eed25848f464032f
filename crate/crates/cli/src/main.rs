fn main() {
    std::process::exit(rvmb_cli::run(std::env::args_os()));
}
