fn main() {
    std::process::exit(gicdc::cli::cli_main(std::env::args_os()));
}
