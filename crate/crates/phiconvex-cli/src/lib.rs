//! Command-line front end for the φ-convexity toolkit.
//!
//! `run` parses flags (optionally merged over a `--config` file, flags
//! winning), executes one analysis job, prints a human-readable report to
//! stdout and optionally a JSON twin via `--json PATH`, then exits with
//! 0 (every checked inequality holds), 1 (a violation witness was found),
//! or 2 (usage or evaluation error, diagnostic on stderr).

mod args;
mod config;
mod error;
mod exec;
mod report;

use std::ffi::OsString;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::args::Cli;
use crate::error::CliError;
use crate::report::{GridEcho, Report, Results};

pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here; everything else is a usage error.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 2u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json_path = cli.json.clone();

    match drive(&mut cli) {
        Ok(report) => {
            print!("{}", report.render_text());
            if let Some(path) = &json_path {
                if let Err(e) = std::fs::write(path, report.to_json() + "\n") {
                    eprintln!("error: cannot write report to {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if report.verdict == "holds" { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(path) = &json_path {
                // Best effort: scripted consumers still get a schema-shaped
                // report with verdict "error".
                let _ = std::fs::write(path, error_report(&cli).to_json() + "\n");
            }
            ExitCode::from(2)
        }
    }
}

fn drive(cli: &mut Cli) -> Result<Report, CliError> {
    config::apply(cli)?;
    let cmd = cli.command.clone().ok_or_else(|| {
        CliError::Usage("no command: pass a subcommand or --config with a `command =` line".into())
    })?;
    let knobs = exec::Knobs::resolve(
        cli.grid, cli.t_steps, cli.refine, cli.tol, cli.quad_tol, cli.seed, cli.workers,
    )?;
    let started = Instant::now();
    let outcome = exec::execute(&cmd, &knobs)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cmd.name().to_string(),
        inputs: outcome.inputs,
        results: outcome.results,
        verdict: outcome.verdict,
        witness: outcome.witness,
        grid: GridEcho::from(&knobs.grid),
        wall_ms,
    })
}

fn error_report(cli: &Cli) -> Report {
    let grid = exec::Knobs::resolve(
        cli.grid, cli.t_steps, cli.refine, cli.tol, cli.quad_tol, cli.seed, cli.workers,
    )
    .map(|k| k.grid)
    .unwrap_or_default();
    Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.as_ref().map(|c| c.name()).unwrap_or("none").to_string(),
        inputs: crate::report::Inputs::default(),
        results: Results::default(),
        verdict: "error".to_string(),
        witness: None,
        grid: GridEcho::from(&grid),
        wall_ms: 0.0,
    }
}
