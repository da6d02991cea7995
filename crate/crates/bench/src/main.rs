fn main() {
    std::process::exit(mapf_bench::cli::main_with_args(std::env::args_os()));
}
