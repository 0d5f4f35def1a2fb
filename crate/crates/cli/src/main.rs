fn main() {
    std::process::exit(lodweaver_cli::run_cli(std::env::args_os()));
}
