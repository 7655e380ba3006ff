//! Command-line front end: `antiito <command> --config PATH [overrides]`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use config::{Command, ExperimentConfig, Format, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] antiito_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "antiito",
    version,
    about = "Stochastic chemotherapy model under the anti-Itô calculus"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON experiment document; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    pub fn effective_config(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = Overrides {
            q: self.q,
            r: self.r,
            v: self.v,
            c: self.c,
            sigma: self.sigma,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
        };
        base.resolve(self.command, &overrides)
    }
}

/// Runs a parsed invocation and writes its artifact.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.effective_config()?;
    let text = with_thread_budget(|| commands::run(&cfg))?.render(&cfg);
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            // a closed reader (`| head`) is not a failure
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

/// Thread count from `ANTIITO_THREADS`; `0` or unset means automatic.
pub fn thread_budget() -> Result<usize, CliError> {
    match std::env::var("ANTIITO_THREADS") {
        Ok(s) => s.trim().parse().map_err(|_| {
            CliError::Config(format!("ANTIITO_THREADS = `{s}` is not a thread count"))
        }),
        Err(_) => Ok(0),
    }
}

#[cfg(feature = "parallel")]
fn with_thread_budget<T: Send>(
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_budget()?)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_thread_budget<T: Send>(
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    thread_budget()?;
    f()
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
