fn main() {
    std::process::exit(g2kernels::cli::run(std::env::args_os()));
}
