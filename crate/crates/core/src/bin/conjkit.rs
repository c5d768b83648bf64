fn main() {
    std::process::exit(conjkit::cli_io::run_command(std::env::args_os()));
}
