fn main() {
    let _ = env_logger::try_init();
    std::process::exit(diffront::harness::cli::cli_main(std::env::args_os()));
}
