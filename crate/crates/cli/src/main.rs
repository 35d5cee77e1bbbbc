use std::process::ExitCode;

fn main() -> ExitCode {
    final_iterate_cli::main_with(std::env::args_os())
}
