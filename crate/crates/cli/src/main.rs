fn main() {
    std::process::exit(qpc_sim_cli::run_cli(std::env::args_os()));
}
