fn main() {
    std::process::exit(chiral_eit::cli::run(std::env::args_os()));
}
