use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use condbench::cli::{run, Cli};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    // help and version go through clap directly
    if let Err(e) = Cli::try_parse_from(std::env::args()) {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
            e.exit();
        }
    }
    match run(&args) {
        Ok(v) => {
            // a closed pipe (`| head`) is not an error of the run
            let _ = writeln!(std::io::stdout().lock(), "{v}");
            // a batch with failed jobs still reports every job, then exits 1
            if args.first().map(String::as_str) == Some("batch") && v["failed"].as_u64().unwrap_or(0) > 0 {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
