fn main() {
    std::process::exit(whatif_cli::commands::main_with_args(std::env::args_os()));
}
