fn main() {
    std::process::exit(equilab::exp::cli::run());
}
