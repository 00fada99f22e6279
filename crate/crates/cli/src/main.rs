fn main() {
    std::process::exit(farm_pricer_cli::run(std::env::args_os()));
}
