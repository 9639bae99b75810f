fn main() {
    std::process::exit(varipade_cli::run(std::env::args_os()));
}
