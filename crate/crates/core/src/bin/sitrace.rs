fn main() {
    std::process::exit(sitrace::cli::run(std::env::args_os()));
}
