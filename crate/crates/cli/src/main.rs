//! `nsbandit`: command-line driver of the Monte-Carlo laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 violated precondition,
//! 4 invariant or numerical failure, 5 a check or acceptance criterion failed.

mod args;
mod commands;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Core(nsbandit::Error),
    Config(String),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(nsbandit::Error::Config(_)) => 2,
            CliError::Core(nsbandit::Error::Precondition(_)) => 3,
            CliError::Core(nsbandit::Error::Invariant(_) | nsbandit::Error::Numerical(_)) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<nsbandit::Error> for CliError {
    fn from(e: nsbandit::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

/// Turns a TOML experiment file into the equivalent argument vector.
fn config_argv(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let command = table
        .get("command")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            CliError::Config(format!("{}: missing string key `command`", path.display()))
        })?;
    let mut argv = vec!["nsbandit".to_string()];
    argv.extend(command.split_whitespace().map(str::to_string));
    for (key, value) in &table {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String, CliError> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(x) => Ok(x.to_string()),
                other => Err(CliError::Config(format!(
                    "unsupported value for `{key}`: {other}"
                ))),
            }
        };
        match value {
            toml::Value::Boolean(true) => argv.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts: Result<Vec<String>, CliError> = items.iter().map(scalar).collect();
                argv.push(flag);
                argv.push(parts?.join(","));
            }
            other => {
                argv.push(flag);
                argv.push(scalar(other)?);
            }
        }
    }
    Ok(argv)
}

fn execute(cli: Cli) -> Result<commands::Outcome, CliError> {
    if let Command::Run { config } = &cli.command {
        let mut argv = config_argv(config)?;
        // command-line placement flags apply unless the file sets them
        if !argv.iter().any(|a| a == "--out") {
            argv.push("--out".into());
            argv.push(cli.out.display().to_string());
        }
        if !argv.iter().any(|a| a == "--workers") {
            argv.push("--workers".into());
            argv.push(cli.workers.to_string());
        }
        let inner = Cli::try_parse_from(&argv).map_err(|e| CliError::Config(e.to_string()))?;
        if matches!(inner.command, Command::Run { .. }) {
            return Err(CliError::Config("a config file cannot invoke `run`".into()));
        }
        return commands::run(&inner);
    }
    commands::run(&cli)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("check failed: {f}");
                }
                ExitCode::from(5)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
