use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stochtrans::{config::RawConfig, Experiment, RunError};

/// Monte Carlo experiments for the stochastic transport equation.
#[derive(Parser)]
#[command(name = "stochtrans", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// `--key=value` overrides applied after the file.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Report every violation in a config file.
    Validate {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print the experiment names and what they produce.
    ListExperiments,
}

fn load(path: &Path, overrides: &[String]) -> Result<RawConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| RunError::Io { context: path.display().to_string(), source })?;
    let mut raw = RawConfig::parse(&text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    Ok(raw)
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, overrides } => {
            let summary = match load(&config, &overrides).and_then(|raw| stochtrans::run(&raw)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            println!("{} ({} rows)", summary.data.display(), summary.rows);
            for p in &summary.extra {
                println!("{}", p.display());
            }
            println!("{}", summary.metadata.display());
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => {
            let raw = match load(&config, &overrides) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let violations = stochtrans::validate(&raw);
            if violations.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for v in &violations {
                    println!("{v}");
                }
                ExitCode::from(2)
            }
        }
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<16} {}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
    }
}
