use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use posmap_cli::config::SEED_ENV;
use posmap_cli::render::render;
use posmap_cli::{run, Cli, CliError, RunConfig};

fn execute() -> Result<bool, CliError> {
    let (kind, flags) = Cli::parse().command.split();
    let cfg = RunConfig::resolve(kind, flags, std::env::var(SEED_ENV).ok())?;
    let outcome = run(&cfg)?;
    let text = render(&outcome, cfg.format);
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    if !outcome.passed() {
        eprintln!("failed checks: {}", outcome.failed.join(", "));
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    match execute() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("posmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
