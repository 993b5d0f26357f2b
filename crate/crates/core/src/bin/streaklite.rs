fn main() {
    std::process::exit(streaklite::cli::main_with_args(std::env::args_os()));
}
