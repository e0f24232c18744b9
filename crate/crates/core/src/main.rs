fn main() {
    std::process::exit(datagrowth::cli::run(std::env::args_os()));
}
