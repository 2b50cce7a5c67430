fn main() {
    std::process::exit(bwspdc::cli::main_with_args(std::env::args_os()));
}
