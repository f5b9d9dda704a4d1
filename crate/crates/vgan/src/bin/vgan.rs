use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(vgan::cli::run(std::env::args()) as u8)
}
