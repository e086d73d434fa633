fn main() {
    std::process::exit(meupdate::cli::main_from_args(std::env::args_os()));
}
