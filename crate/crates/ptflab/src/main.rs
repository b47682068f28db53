use std::process::exit;

fn main() {
    exit(ptflab::cli::run(std::env::args_os()));
}
