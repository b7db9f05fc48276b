//! The `ffmoments` harness: configuration, family-table cache, experiment
//! dispatch and report serialization. `main.rs` is a thin shell over [`main_with`].

pub mod cache;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub use config::{Cli, CommandKind, Options, RunConfig};
pub use error::HarnessError;
pub use report::{Report, RunOutput};
pub use run::run;

/// Default output directory when neither flag nor config file names one.
pub const DEFAULT_OUT_DIR: &str = "ffmoments-out";

/// Resolves, runs and writes artifacts; prints the report JSON to stdout.
pub fn execute(cli: &Cli) -> Result<RunOutput, HarnessError> {
    let env_cache = std::env::var_os(config::CACHE_ENV).map(PathBuf::from);
    let config = RunConfig::resolve(cli.command.kind(), cli.command.options(), env_cache)?;
    let output = run(&config)?;
    for warning in &output.report.meta.warnings {
        eprintln!("warning: {warning}");
    }
    let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    output.write_to(&dir)?;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", output.report.to_json()?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    Ok(output)
}

/// Process entry point; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
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
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
