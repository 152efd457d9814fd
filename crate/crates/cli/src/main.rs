fn main() {
    std::process::exit(rmt_cli::main_with_args(std::env::args_os().collect()));
}
