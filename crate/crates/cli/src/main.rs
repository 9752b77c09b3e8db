//! `sethit`: command-line front end. Every run prints one report (JSON by default) on standard
//! output and exits 0 when the computation succeeded and every checked inequality held, 1 when
//! an inequality failed or the input was refused, and 2 on usage or parse errors.

mod args;
mod commands;
mod inputs;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use sethit::number::Exactness;
use sethit::Error;

use args::Cli;
use report::{RunReport, Status};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// Bad input is a usage error; everything else the library declines to do is a refusal.
    fn is_usage(&self) -> bool {
        match self {
            CliError::Usage(_) => true,
            CliError::Core(e) => matches!(
                e,
                Error::Parse { .. } | Error::Invalid(_) | Error::Normalization(_) | Error::Range(_) | Error::Json(_)
            ),
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }

    let start = Instant::now();
    let mut reader = inputs::Reader::default();
    let outcome = commands::run(&cli.command, cli.global.budget, &mut reader);
    let command = argv.into_iter().skip(1).collect();
    let wall_time_ms = start.elapsed().as_millis() as u64;
    let report = match outcome {
        Ok(o) => RunReport {
            command,
            inputs: reader.digests,
            exactness: o.exactness,
            seed: o.seed,
            samples: o.samples,
            status: if o.holds { Status::Pass } else { Status::Fail },
            results: report::tag_exactness(o.results),
            wall_time_ms,
        },
        Err(e) if e.is_usage() => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("refused: {}", e.message());
            RunReport {
                command,
                inputs: reader.digests,
                exactness: Exactness::Rational,
                seed: None,
                samples: None,
                status: Status::Refused,
                results: serde_json::json!({ "error": e.message() }),
                wall_time_ms,
            }
        }
    };
    print!("{}", report.render(cli.global.table));
    ExitCode::from(report.status.exit_code() as u8)
}
