fn main() {
    std::process::exit(bohr_roth_cli::run(std::env::args_os()));
}
