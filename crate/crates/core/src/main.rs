use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(tukey::cli::run(std::env::args_os()))
}
