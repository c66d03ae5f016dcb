use std::process::ExitCode;

fn main() -> ExitCode {
    fixdesc::cli::run()
}
