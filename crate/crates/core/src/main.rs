fn main() {
    std::process::exit(sqg_sphere::cli::run(std::env::args_os()));
}
