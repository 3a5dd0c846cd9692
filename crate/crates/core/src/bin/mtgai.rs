fn main() {
    std::process::exit(mtgai::cli::run_cli(std::env::args_os()));
}
