use std::process::ExitCode;

fn main() -> ExitCode {
    coevo::cli::main()
}
