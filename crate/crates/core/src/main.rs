fn main() -> std::process::ExitCode {
    plnc::cli::run(std::env::args_os())
}
