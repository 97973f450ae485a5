//! Command-line frontend for `scalelaw`.
//!
//! Every subcommand prints a JSON [`Report`](report::Report) on standard
//! output. Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub mod args;
pub mod commands;
pub mod plot;
pub mod report;

use args::{Cli, Command, DiagnoseCommand, OutputFormat};
use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl From<scalelaw::Error> for CliError {
    fn from(e: scalelaw::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

pub fn dispatch(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Fit(a) => commands::fit(a),
        Command::Bootstrap(a) => commands::bootstrap_cmd(a),
        Command::Predict(a) => commands::predict(a),
        Command::Holdout(a) => commands::holdout(a),
        Command::Select(a) => commands::select(a),
        Command::Flops(a) => commands::flops_cmd(a),
        Command::Diagnose(DiagnoseCommand::Earlystop(a)) => commands::earlystop(a),
        Command::Diagnose(DiagnoseCommand::FitOutlier(a)) => commands::fit_outlier(a),
        Command::Synth(a) => commands::synth(a),
        Command::Plot(a) => commands::plot(a),
    }
}

/// Parses `argv`, runs the subcommand, and writes the report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };

    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
        },
        None => dispatch(&cli.command),
    };

    match result {
        Ok(report) => {
            let text = match cli.format {
                OutputFormat::Json => report.to_json(),
                OutputFormat::Table => report.to_table(),
            };
            if let Err(e) = out.write_all(text.as_bytes()) {
                let _ = writeln!(err, "error: writing report: {e}");
                return EXIT_DATA;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
