use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use satsec_cli::config::{self, MethodName};
use satsec_cli::output::write_csv;
use satsec_cli::sweep::{self, RunSettings};

/// Secrecy metrics of a satellite uplink under random eavesdropping
/// constellations, swept over one parameter.
#[derive(Debug, Parser)]
#[command(name = "satsec", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo seed (overrides sweep.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trials per point (overrides sweep.mc_trials).
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; output does not depend on it (overrides sweep.workers).
    #[arg(long)]
    workers: Option<usize>,
    /// Methods to evaluate, comma separated: exact, approx, asymptotic, mc
    /// (overrides sweep.methods).
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Override a config value, e.g. `--set system.tx_power_dbm=30` or
    /// `--set layers.0.count=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(args: Args) -> Result<()> {
    let mut cfg = config::load(&args.config, &args.overrides)?;
    if !args.method.is_empty() {
        cfg.sweep.methods = args.method.iter().map(|m| MethodName::parse(m)).collect::<Result<_>>()?;
    }
    if let Some(t) = args.trials {
        cfg.sweep.mc_trials = t;
    }
    if let Some(s) = args.seed {
        cfg.sweep.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.sweep.workers = w;
    }
    let settings = RunSettings { trials: cfg.sweep.mc_trials, seed: cfg.sweep.seed, workers: cfg.sweep.workers.max(1) };
    let rows = sweep::run(&cfg, settings, &mut |msg| eprintln!("warning: {msg}"))?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows)?;
    match &args.out {
        Some(path) => std::fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&buf)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
