fn main() {
    std::process::exit(fabba_cli::dispatch(std::env::args_os()));
}
