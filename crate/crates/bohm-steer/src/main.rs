fn main() {
    std::process::exit(bohm_steer::cli::main_with_args(std::env::args()));
}
