fn main() {
    std::process::exit(condwalk::cli::dispatch(std::env::args()));
}
