use std::process::ExitCode;

fn main() -> ExitCode {
    lodprobe::main_with_args(std::env::args_os())
}
