use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mabk_cli::report::render;
use mabk_cli::{run, Cli, EXIT_VERDICT};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(render(&report, cli.format).as_bytes());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERDICT)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
