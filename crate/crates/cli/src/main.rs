use std::process::ExitCode;

use clap::Parser;

use qcert_cli::args::Cli;
use qcert_cli::exit;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            return ExitCode::from(code as u8);
        }
    };
    if let Some(t) = std::env::var("QCERT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("warning: QCERT_THREADS ignored: {e}");
        }
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match qcert_cli::run(&cli, &mut out) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
