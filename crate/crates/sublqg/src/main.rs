use std::process::ExitCode;

fn main() -> ExitCode {
    sublqg::cli::run(std::env::args_os())
}
