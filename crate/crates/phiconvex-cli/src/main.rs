use std::process::ExitCode;

fn main() -> ExitCode {
    phiconvex_cli::run(std::env::args_os())
}
