fn main() -> std::process::ExitCode {
    pla_core::cli::run(std::env::args_os())
}
