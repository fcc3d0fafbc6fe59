fn main() {
    std::process::exit(henon_lab_cli::run_command(std::env::args_os()));
}
