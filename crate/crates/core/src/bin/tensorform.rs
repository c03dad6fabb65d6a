use std::process::ExitCode;

fn main() -> ExitCode {
    tensorform::cli::run()
}
