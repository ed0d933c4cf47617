use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kgembed::check::{format_table, run_checks};
use kgembed::config::{parse_config, RawConfig, RunConfig};
use kgembed::io::write_diagnostics;
use kgembed::{sim, KgError};

/// Exit status for a numerical blowup (non-finite field values).
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "kgsim",
    version,
    about = "Spectral Klein-Gordon simulator with eta+/eta- diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured simulation, writing diagnostics and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the t = 0 decomposition as a single diagnostics row.
    Decompose {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite against the thresholds in the config.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Repeat `simulate` for each value of one config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn load(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&load(path)?).with_context(|| format!("in config {}", path.display()))
}

/// Returns `Ok(false)` when a check fails.
fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate { config } => {
            let cfg = load_config(&config)?;
            let out = sim::simulate(&cfg)?;
            println!(
                "wrote {} records to {} ({} snapshots), t = {}",
                out.records.len(),
                out.diagnostics_path.display(),
                out.snapshots.len(),
                out.final_state.t
            );
            Ok(true)
        }
        Command::Decompose { config } => {
            let cfg = load_config(&config)?;
            let rec = sim::decompose(&cfg)?;
            write_diagnostics(&cfg.output.diagnostics_path, &[rec])?;
            println!(
                "norm_plus = {:e}, norm_minus = {:e}, rho_integral = {:e} -> {}",
                rec.norm_plus,
                rec.norm_minus,
                rec.rho_integral,
                cfg.output.diagnostics_path.display()
            );
            Ok(true)
        }
        Command::Check { config } => {
            let cfg = load_config(&config)?;
            let outcomes = run_checks(&cfg)?;
            print!("{}", format_table(&outcomes));
            let passed = outcomes.iter().all(|o| o.passed);
            println!(
                "{}",
                if passed {
                    "all checks passed"
                } else {
                    "some checks FAILED"
                }
            );
            Ok(passed)
        }
        Command::Sweep { config, key, values } => {
            let raw = RawConfig::parse(&load(&config)?)?;
            let configs = sim::sweep_configs(&raw, &key, &values)?;
            let mut first_err = None;
            for (v, res) in values.iter().zip(sim::sweep(&configs)) {
                match res {
                    Ok(out) => println!("{key} = {v}: {}", out.diagnostics_path.display()),
                    Err(e) => {
                        eprintln!("{key} = {v}: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            match first_err {
                Some(e) => Err(e.into()),
                None => Ok(true),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            let blowup = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<KgError>(), Some(KgError::Blowup { .. })));
            if blowup {
                ExitCode::from(EXIT_BLOWUP)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
