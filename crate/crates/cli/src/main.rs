mod args;
mod commands;
mod io;
mod model;
mod selftest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

const THREADS_ENV: &str = "CODEC_LENS_THREADS";

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .parse()
            .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Basis(a) => commands::basis(&a)?,
        Command::Decompose(a) => commands::decompose(&a)?,
        Command::Separability(a) => commands::separability_cmd(&a)?,
        Command::Rates(a) => commands::rates(&a)?,
        Command::Compare(a) => commands::compare(&a)?,
        Command::Selftest(a) => {
            if !selftest::run(&a)? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
