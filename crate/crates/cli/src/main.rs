fn main() {
    std::process::exit(geolab_cli::run(std::env::args()));
}
