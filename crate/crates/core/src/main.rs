fn main() {
    std::process::exit(blackout_risk::cli::main());
}
