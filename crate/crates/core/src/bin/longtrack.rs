fn main() {
    std::process::exit(longtrack::bench::cli::main_with_args(std::env::args_os()));
}
