use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match shapesearch_cli::run_from_args(std::env::args_os(), &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shapesearch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
