fn main() {
    std::process::exit(netmiss::cli::run(std::env::args_os()));
}
