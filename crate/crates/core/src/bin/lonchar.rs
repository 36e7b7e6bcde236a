fn main() {
    std::process::exit(lonchar::app::run(std::env::args_os()));
}
