//! `mflab`: runs finite-volume experiments on mean-field lattice fermion
//! models from a TOML config and writes `report.json` plus CSV tables.
//!
//! Exit status: 0 when every check passes, 2 when a check fails, 3 for an
//! invalid config, 4 for a numerical failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::json;

use crate::commands::Command;
use crate::config::{ConfigError, Experiment};
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "mflab", version, about = "Mean-field lattice fermion experiments")]
struct Cli {
    /// Command to run; defaults to `run.command` in the config.
    command: Option<Command>,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `run.out` in the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Config override `key.path=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(cli: &Cli) -> Result<bool> {
    let config = config::load(&cli.config, &cli.overrides, cli.command, cli.seed)?;
    let command = config.run.command.expect("load resolves the command");
    let out = cli.out.clone().or_else(|| config.run.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let exp = Experiment::new(config)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let name = command.name();
    let mut report = Report::new(&name, &exp)?;
    commands::run(command, &exp, &mut report, &out)?;
    let path = report.write(&out)?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{name}: {} ({} checks, {failed} failed) -> {}", report.status, report.checks.len(), path.display());
    Ok(report.passed())
}

/// Machine-readable code and exit status of an error.
fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    if let Some(e) = err.downcast_ref::<ConfigError>() {
        (e.code, 3)
    } else if let Some(e) = err.downcast_ref::<mflab_core::Error>() {
        (e.code(), 4)
    } else {
        ("io", 4)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            let (code, status) = classify(&err);
            eprintln!("error: {err:#}");
            eprintln!("{}", json!({ "error": { "code": code, "message": format!("{err:#}") } }));
            ExitCode::from(status)
        }
    }
}
