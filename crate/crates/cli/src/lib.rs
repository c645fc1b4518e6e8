//! `erw` command-line front-end.
//!
//! Exit codes: 0 success or passing check, 1 failed check (certificate
//! short of all β, cross-check mismatch), 2 usage error, 3 divergence or
//! resource limit.

pub mod args;
pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::{CliError, Outcome, EXIT_USAGE};
use crate::report::{Meta, Report};

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn config_of(command: &Command) -> Result<(serde_json::Value, Option<u64>), CliError> {
    let json = |v: Result<serde_json::Value, serde_json::Error>| v.map_err(|e| CliError::Io(e.to_string()));
    Ok(match command {
        Command::Greens(a) => (json(serde_json::to_value(a))?, None),
        Command::Constants(a) => (json(serde_json::to_value(a))?, None),
        Command::Bounds(a) => (json(serde_json::to_value(a))?, None),
        Command::Certify(a) => (json(serde_json::to_value(a))?, None),
        Command::Expansion(a) => (json(serde_json::to_value(a))?, None),
        Command::Crosscheck(a) => (json(serde_json::to_value(a))?, None),
        Command::Simulate(a) => (json(serde_json::to_value(a))?, Some(a.sampling.seed)),
        Command::Scan(a) => (json(serde_json::to_value(a))?, Some(a.sampling.seed)),
    })
}

fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Greens(a) => commands::greens(a),
        Command::Constants(a) => commands::constants(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Certify(a) => commands::certify_cmd(a),
        Command::Expansion(a) => commands::expansion(a),
        Command::Crosscheck(a) => commands::crosscheck(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Scan(a) => commands::scan(a),
    }
}

fn execute(cli: &Cli) -> Result<(i32, String), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Resource(e.to_string()))?;
    let outcome = pool.install(|| dispatch(&cli.command))?;
    let (config, seed) = config_of(&cli.command)?;
    let timestamp = (!cli.global.no_timestamp)
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let report = Report {
        meta: Meta {
            version: env!("CARGO_PKG_VERSION"),
            command: cli.command.name(),
            config,
            seed,
            timestamp,
        },
        results: outcome.results,
        verdict: outcome.verdict,
        notes: outcome.notes,
        table: outcome.table,
    };
    let text = report.render(cli.global.format).map_err(CliError::Io)?;
    Ok((outcome.exit, text))
}

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if e.use_stderr() { (String::new(), text) } else { (text, String::new()) };
            return Execution { code, stdout, stderr };
        }
    };
    match execute(&cli) {
        Ok((code, text)) => match &cli.global.output {
            Some(path) => match std::fs::write(path, &text) {
                Ok(()) => Execution {
                    code,
                    stdout: String::new(),
                    stderr: String::new(),
                },
                Err(e) => Execution {
                    code: CliError::Io(e.to_string()).exit_code(),
                    stdout: String::new(),
                    stderr: format!("erw: cannot write {}: {e}\n", path.display()),
                },
            },
            None => Execution {
                code,
                stdout: text,
                stderr: String::new(),
            },
        },
        Err(e) => Execution {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("erw: error: {e}\n"),
        },
    }
}
