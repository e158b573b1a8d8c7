mod bounds;
mod compare;
mod simulate;
mod spectrum;
mod verdict;

use std::fmt;

use collapse_core::models::{builtin_experiments, load_experiments};
use collapse_core::{Error, ExperimentRecord, PhysicalConstants};
use serde_json::Value;

use crate::args::{Cli, Command};
use crate::output::OutDir;
use crate::{EXIT_FAILURE, EXIT_NUMERIC, EXIT_USAGE};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: flags, config files, parameters out of domain.
    Usage(String),
    /// A computation did not converge or bracket.
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Config(_)
            | Error::Regime(_)
            | Error::Length { .. }
            | Error::Alignment(_) => CliError::Usage(msg),
            Error::Numeric { .. }
            | Error::NoSteadyState(_)
            | Error::Fit(_)
            | Error::Bisection(_)
            | Error::Stiffness { .. } => CliError::Numeric(msg),
        }
    }
}

/// Output errors from the table and manifest helpers are plain strings.
impl From<String> for CliError {
    fn from(e: String) -> Self {
        CliError::Io(e)
    }
}

pub type CmdResult = Result<u8, CliError>;

pub struct Context {
    pub out: OutDir,
    pub consts: PhysicalConstants,
    /// Resolved settings recorded in the manifest.
    pub config: serde_json::Map<String, Value>,
}

impl Context {
    pub fn record(&mut self, key: &str, value: impl serde::Serialize) {
        self.config
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }
}

pub fn dispatch(cli: &Cli, ctx: &mut Context) -> CmdResult {
    let experiments = experiments(cli, ctx)?;
    ctx.record("experiments", &experiments);
    match &cli.command {
        Command::Bounds(a) => bounds::run(a, &experiments, ctx),
        Command::Compare(a) => compare::run(a, &experiments, ctx),
        Command::Spectrum(a) => spectrum::run(a, &experiments, ctx),
        Command::Simulate(a) => simulate::run(a, cli.global.seed, ctx),
        Command::Verdict(a) => verdict::run(a, &experiments, ctx),
        Command::Rerun(_) => unreachable!("rerun is resolved before dispatch"),
    }
}

fn experiments(cli: &Cli, ctx: &Context) -> Result<Vec<ExperimentRecord>, CliError> {
    match &cli.global.experiments {
        None => Ok(builtin_experiments(&ctx.consts)),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Ok(load_experiments(Some(&text), &ctx.consts)?)
        }
    }
}

pub fn find_experiment<'a>(experiments: &'a [ExperimentRecord], name: &str) -> Result<&'a ExperimentRecord, CliError> {
    experiments
        .iter()
        .find(|e| e.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let names: Vec<&str> = experiments.iter().map(|e| e.name()).collect();
            CliError::Usage(format!("no experiment `{name}`; known: {}", names.join(", ")))
        })
}

/// Prints a line, ignoring a closed stdout (e.g. piped into `head`).
pub fn say(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

/// `1e-4` style label for file names and titles.
pub fn label(v: f64) -> String {
    format!("{v:e}")
}
