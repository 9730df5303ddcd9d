fn main() {
    std::process::exit(sigma_eigen::cli::run(std::env::args_os()));
}
