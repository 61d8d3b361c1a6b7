fn main() -> std::process::ExitCode {
    asdface::cli::main_with_args(std::env::args_os().collect())
}
