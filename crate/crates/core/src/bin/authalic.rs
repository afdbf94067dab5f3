use std::process::ExitCode;

fn main() -> ExitCode {
    authalic::cli::main_with_args(std::env::args_os())
}
