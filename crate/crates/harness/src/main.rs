fn main() {
    std::process::exit(sparse_hawkes_harness::cli::run_cli(std::env::args_os()));
}
