use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(quadswarm::scenario::cli::run(std::env::args_os()))
}
