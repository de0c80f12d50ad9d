fn main() {
    std::process::exit(toda_lattice::cli::run(std::env::args_os()));
}
