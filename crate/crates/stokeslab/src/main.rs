use std::process;

fn main() {
    process::exit(stokeslab::run(std::env::args()));
}
