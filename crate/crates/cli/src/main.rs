fn main() {
    std::process::exit(hqlip_cli::run(std::env::args_os()));
}
