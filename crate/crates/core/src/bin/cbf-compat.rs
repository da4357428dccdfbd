fn main() {
    std::process::exit(cbf_compat::cli::run(std::env::args_os()));
}
