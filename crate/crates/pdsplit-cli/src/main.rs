use std::process::ExitCode;

fn main() -> ExitCode {
    let code = pdsplit_cli::cli::run_cli(std::env::args());
    ExitCode::from(code.clamp(0, 255) as u8)
}
