use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(jfts_cli::run(std::env::args_os()) as u8)
}
