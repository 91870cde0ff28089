fn main() {
    std::process::exit(ufs_core::cli::run_command(std::env::args_os()));
}
