use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ssv_core::cli::main_with_args(std::env::args_os()))
}
