use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ddsim_core::harness::{self, ExperimentConfig, ExperimentId};

#[derive(Parser)]
#[command(name = "ddsim", version, about = "Dynamical-decoupling experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV.
    Run {
        /// TOML experiment config.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Run a built-in preset instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output CSV; stdout when neither this nor the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List preset ids, or print one preset as TOML.
    Presets {
        id: Option<String>,
    },
    /// Check the effective-Hamiltonian expansion against exact cycle propagators.
    Verify,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            preset,
            seed,
            workers,
            out,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(&path)
                    .with_context(|| format!("loading {}", path.display()))?,
                (None, Some(id)) => harness::preset(ExperimentId::parse(&id)?),
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let result = harness::run_experiment(&cfg)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            match &cfg.output {
                Some(path) => {
                    result
                        .write_csv(path)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote {} points to {}", result.points.len(), path.display());
                }
                None => std::io::stdout().write_all(result.to_csv()?.as_bytes())?,
            }
        }
        Command::Presets { id: None } => {
            for id in ExperimentId::ALL {
                let cfg = harness::preset(id);
                println!("{:<7} {} protocols, horizon {}", id.name(), cfg.protocols.len(), cfg.run.horizon);
            }
        }
        Command::Presets { id: Some(id) } => {
            print!("{}", harness::preset(ExperimentId::parse(&id)?).to_toml()?);
        }
        Command::Verify => {
            let report = harness::verify_suite()?;
            print!("{}", report.render());
            if !report.passed() {
                bail!("effective-Hamiltonian check failed");
            }
        }
    }
    Ok(())
}
