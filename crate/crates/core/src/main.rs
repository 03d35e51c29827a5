fn main() {
    std::process::exit(ldp_renewal::cli::main_with_args(std::env::args_os()));
}
