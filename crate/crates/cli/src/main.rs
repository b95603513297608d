//! `qtb`: reproducible work-benefit experiments written as CSV.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 invariant violated
//! during the run, 4 I/O failure. `QTB_THREADS` caps worker threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod inputs;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtb_core::Error;

use config::{
    ChannelBenefit, Classify, ConditionalWork, MeasureBenefit, PostselectScan, ProtocolSteps, WeightCompare,
    WeightConverge,
};

#[derive(Debug, Parser)]
#[command(name = "qtb", version, about = "Single-use work benefit of quantum channels and measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    ChannelBenefit(ChannelBenefit),
    MeasureBenefit(MeasureBenefit),
    ConditionalWork(ConditionalWork),
    PostselectScan(PostselectScan),
    WeightConverge(WeightConverge),
    WeightCompare(WeightCompare),
    ProtocolSteps(ProtocolSteps),
    Classify(Classify),
}

#[derive(Debug)]
pub enum CliError {
    /// Each entry is one violated precondition.
    Validation(Vec<String>),
    Invariant(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(problems) => {
                write!(f, "invalid configuration:")?;
                for p in problems {
                    write!(f, "\n  - {p}")?;
                }
                Ok(())
            }
            CliError::Invariant(msg) => write!(f, "invariant violated: {msg}"),
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ProbabilityBelowFloor { .. } | Error::InconsistentDilation { .. } => CliError::Invariant(e.to_string()),
            _ => CliError::Validation(vec![e.to_string()]),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QTB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(vec![format!("QTB_THREADS must be a positive integer, got '{raw}'")]))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (name, (table, canonical, output)) = match cli.command {
        Command::ChannelBenefit(s) => ("channel-benefit", commands::run_with(s, commands::channel_benefit)?),
        Command::MeasureBenefit(s) => ("measure-benefit", commands::run_with(s, commands::measure_benefit)?),
        Command::ConditionalWork(s) => ("conditional-work", commands::run_with(s, commands::conditional_work)?),
        Command::PostselectScan(s) => ("postselect-scan", commands::run_with(s, commands::postselect_scan)?),
        Command::WeightConverge(s) => ("weight-converge", commands::run_with(s, commands::weight_converge)?),
        Command::WeightCompare(s) => ("weight-compare", commands::run_with(s, commands::weight_compare)?),
        Command::ProtocolSteps(s) => ("protocol-steps", commands::run_with(s, commands::protocol_steps)?),
        Command::Classify(s) => ("classify", commands::run_with(s, commands::classify)?),
    };
    let hash = report::sha256_hex(format!("{name}\n{canonical}").as_bytes());
    let text = table.render(name, &hash);
    match output {
        Some(path) => report::write_atomic(&path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
