fn main() {
    std::process::exit(peerpred_cli::run_cli(std::env::args_os()));
}
