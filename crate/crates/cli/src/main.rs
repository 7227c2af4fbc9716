mod args;
mod commands;
mod report;

use std::process::ExitCode;

use bdmap::{Error, Exec};
use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::commands::Failure;

const EXIT_ASSERTION: u8 = 1;
const EXIT_CERTIFICATION: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };

    let exec = match cli.common.threads {
        Some(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
            if n == 1 {
                Exec::Sequential
            } else {
                Exec::Parallel
            }
        }
        None => Exec::default(),
    };

    let report = match commands::run(&cli.command, cli.common.tol, exec) {
        Ok(r) => r,
        Err(Failure::Analysis(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
        Err(Failure::Output(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ASSERTION);
        }
    };
    if let Err(e) = report.emit(cli.common.format, cli.common.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ASSERTION);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: at least one check failed");
        ExitCode::from(EXIT_ASSERTION)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DepthCap { .. } | Error::Precondition(_) | Error::Domain { .. } => EXIT_USAGE,
        Error::Certification { .. } | Error::SolverFailure { .. } => EXIT_CERTIFICATION,
        _ => EXIT_ASSERTION,
    }
}
