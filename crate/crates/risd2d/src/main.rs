use risd2d::harness::cli;

fn main() {
    std::process::exit(cli::run());
}
