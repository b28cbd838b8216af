fn main() {
    std::process::exit(idiff_bench::cli::run(std::env::args_os()));
}
