fn main() {
    std::process::exit(capdisc::cli::main_entry(std::env::args_os()));
}
