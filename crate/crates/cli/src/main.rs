fn main() {
    std::process::exit(phaseforge_cli::run(std::env::args_os()));
}
