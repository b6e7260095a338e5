use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let code = batchsched_cli::run_cli(std::env::args_os(), &mut stdout.lock());
    ExitCode::from(code)
}
