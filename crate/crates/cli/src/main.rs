fn main() {
    let code = cane_cli::run_cli(std::env::args_os());
    std::process::exit(code);
}
