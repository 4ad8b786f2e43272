fn main() {
    std::process::exit(v2p_sim::cli::dispatch(std::env::args_os()));
}
