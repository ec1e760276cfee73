mod args;
mod config;
mod error;
mod output;
mod scenarios;
mod tolerances;
mod verify;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use config::Resolver;
use error::{CliError, EXIT_CHECK_FAILED};
use output::{write_json, Manifest};

/// Thread count from `EVLAB_THREADS`; unset leaves rayon's default.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("EVLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("EVLAB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Threads(e.to_string()))
}

fn run(cli: &Cli) -> Result<Manifest, CliError> {
    init_threads()?;
    let started = Instant::now();
    let r = Resolver::load(cli.config.as_deref())?;
    let (mut manifest, path) = match &cli.command {
        Command::Spectrum(a) => scenarios::spectrum(a, cli, r)?,
        Command::Decay(a) => scenarios::decay(a, cli, r)?,
        Command::Pulse(a) => scenarios::pulse(a, cli, r)?,
        Command::Hartman(a) => scenarios::hartman(a, cli, r)?,
        Command::Quantum(a) => scenarios::quantum(a, cli, r)?,
        Command::Verify(a) => verify::verify(a, cli, r)?,
    };
    if cli.record_runtime {
        manifest.runtime_seconds = Some(started.elapsed().as_secs_f64());
    }
    write_json(&path, &manifest)?;
    Ok(manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) if m.passed => ExitCode::SUCCESS,
        Ok(m) => {
            for c in m.failed_checks() {
                eprintln!("evlab: check failed: {} = {} (tolerance {})", c.name, c.value, c.tolerance);
            }
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("evlab: {e}");
            e.exit_code()
        }
    }
}
