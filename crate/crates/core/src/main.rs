fn main() {
    std::process::exit(dppdesign::cli::run(std::env::args_os()));
}
