fn main() {
    std::process::exit(prnu_cli::run(std::env::args_os()));
}
