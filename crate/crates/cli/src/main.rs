//! `limsup` — does a sequence of events keep happening forever?
//!
//! Feed it a table of event probabilities (`classify`), or let it generate
//! the scaled-running-maximum events of the built-in Clayton model
//! (`analyze`, `simulate`, `verify`).
//!
//! Exit status: 0 for a definite verdict or a clean run, 1 for runtime
//! failures and failed checks, 2 for usage errors, 3 for an inconclusive
//! verdict.

mod analyze;
mod classify;
mod output;
mod simulate;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use limsup_core::tabular::TabularError;
use limsup_core::{ClaytonError, LabError, LemmaError};

pub(crate) const EXIT_OK: u8 = 0;
pub(crate) const EXIT_FAIL: u8 = 1;
pub(crate) const EXIT_USAGE: u8 = 2;
pub(crate) const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "limsup",
    version,
    about = "Decide whether a sequence of events occurs infinitely often",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a probability table into io-zero / io-one / unknown
    Classify(classify::ClassifyArgs),
    /// Closed-form analysis of the scaled-running-maximum events
    Analyze(analyze::AnalyzeArgs),
    /// Monte-Carlo cross-check of the closed forms and the a.s. limit
    Simulate(simulate::SimulateArgs),
    /// Run the built-in consistency checks on the analytic identities
    Verify(verify::VerifyArgs),
}

/// Failures that were not representable as a verdict.
pub(crate) enum Failure {
    /// Bad parameter values or flag combinations (exit 2).
    Usage(String),
    /// I/O problems, malformed input, internal evaluation errors (exit 1).
    Runtime(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<TabularError> for Failure {
    fn from(e: TabularError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<LemmaError> for Failure {
    fn from(e: LemmaError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<ClaytonError> for Failure {
    fn from(e: ClaytonError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            // Inner evaluation errors are runtime problems; everything else
            // in LabError is a malformed experiment description.
            LabError::Lemma(inner) => Failure::Runtime(inner.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Classify(args) => classify::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Verify(args) => verify::run(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
