fn main() {
    std::process::exit(bosonlab::cli::main_with_args(std::env::args_os()));
}
