//! `ionlink` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error, 3 config error.
//! Diagnostics go to stderr; stdout only carries the result table with
//! `--stdout`.

mod args;
mod commands;
mod output;
mod settings;

use clap::Parser;
use std::io::Write as _;
use std::process::ExitCode;

use args::{Cli, Command};
use ionlink::exec::Exec;
use settings::*;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(ionlink::Error),
}

impl From<ionlink::Error> for CliError {
    fn from(e: ionlink::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn resolve<T: serde::Serialize>(
    mut s: T,
    apply: impl FnOnce(&mut T),
    validate: impl Fn(&T) -> Result<(), CliError>,
) -> Result<(T, Vec<u8>), CliError> {
    apply(&mut s);
    validate(&s)?;
    let bytes = commands::json(&s);
    Ok((s, bytes))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let cfg = cli.config.as_deref();
    let (config, seed, outcome) = match &cli.command {
        Command::Trap(a) => {
            let (s, bytes) = resolve(load::<TrapSettings>(cfg)?, |s| s.apply(a), TrapSettings::validate)?;
            (bytes, cli.seed.unwrap_or(0), commands::trap(&s)?)
        }
        Command::Correlate(a) => {
            let (s, bytes) = resolve(load::<CorrelateSettings>(cfg)?, |s| s.apply(a, cli.seed), CorrelateSettings::validate)?;
            (bytes, s.seed, commands::correlate(&s, exec)?)
        }
        Command::Gate(a) => {
            let (s, bytes) = resolve(load::<GateSettings>(cfg)?, |s| s.apply(a), GateSettings::validate)?;
            (bytes, cli.seed.unwrap_or(0), commands::gate(&s, a.table)?)
        }
        Command::Teleport(a) => {
            let (s, bytes) = resolve(load::<TeleportSettings>(cfg)?, |s| s.apply(a, cli.seed), TeleportSettings::validate)?;
            (bytes, s.seed, commands::teleport(&s, exec)?)
        }
        Command::Tomography(a) => {
            let (s, bytes) = resolve(load::<TomographySettings>(cfg)?, |s| s.apply(a), TomographySettings::validate)?;
            (bytes, cli.seed.unwrap_or(0), commands::tomography(&s)?)
        }
        Command::Scale(a) => {
            let (s, bytes) = resolve(load::<ScaleSettings>(cfg)?, |s| s.apply(a), ScaleSettings::validate)?;
            (bytes, cli.seed.unwrap_or(0), commands::scale(&s)?)
        }
    };
    let manifest = output::write_run(&cli.out, cli.command.name(), &config, seed, &outcome.artifacts)?;
    if cli.stdout {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(outcome.table.as_bytes());
        let _ = out.flush();
    } else {
        eprint!("{}", outcome.table);
    }
    log::info!("wrote {} files to {}", manifest.artifact_paths.len() + 1, cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
