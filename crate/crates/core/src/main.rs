use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use elastic_mkv::experiments::{oracle_values, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "elastic-mkv", version, about = "McKean-Vlasov solvers with elastic stopping-time feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV tables and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the closed-form reference values.
    Oracles,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, output_dir, threads, seed } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = output_dir
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.name()));
            if let Some(n) = threads {
                if n == 0 {
                    bail!("--threads must be at least 1");
                }
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
            }
            let manifest = run_experiment(&cfg, &dir).with_context(|| format!("running {}", config.display()))?;
            println!("wrote {} files to {}", manifest.files.len(), dir.display());
            for (name, value) in &manifest.checks {
                println!("  {name}: {value}");
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("validating {}", config.display()))?;
            println!("ok: {} (seed {})", cfg.kind.name(), cfg.seed);
        }
        Command::Oracles => {
            for (name, value) in oracle_values()? {
                println!("{value:.9}  {name}");
            }
        }
    }
    Ok(())
}
