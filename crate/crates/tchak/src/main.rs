fn main() {
    std::process::exit(tchak::run(std::env::args_os()));
}
