mod args;
mod commands;
mod input;
mod output;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::json;

use crate::args::{Cli, Command};
use crate::output::render;

const EXIT_DIAGNOSTIC: u8 = 2;
const EXIT_INPUT: u8 = 3;

fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let (outcome, args) = match &cli.command {
        Command::HardyWeight(a) => (commands::hardy_weight(a, g)?, serde_json::to_value(a)?),
        Command::Verify(a) => (commands::verify(a, g)?, serde_json::to_value(a)?),
        Command::Sweep(a) => (commands::sweep(a, g)?, serde_json::to_value(a)?),
        Command::Green(a) => (commands::green(a, g)?, serde_json::to_value(a)?),
        Command::CoareaCheck(a) => (commands::coarea_check(a, g)?, serde_json::to_value(a)?),
    };
    let name = cli.command.name();
    let config = json!({ "command": name, "global": g, "args": args });
    let text = render(name, &config, &outcome.payload, g.format);
    match &g.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(outcome.failed)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use hardy_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::SolverDivergence { .. } | E::NotPositiveDefinite { .. } | E::EigSolverFailure(_)) => EXIT_DIAGNOSTIC,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_DIAGNOSTIC),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
