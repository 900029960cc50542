fn main() {
    std::process::exit(gridfuse::cli::run(std::env::args_os()));
}
