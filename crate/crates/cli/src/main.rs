fn main() {
    std::process::exit(gafsim_cli::run(std::env::args_os()));
}
