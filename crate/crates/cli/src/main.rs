//! `recon`: simulate two-way CVQKD raw data, run the logical-layer
//! reconciliation over it, and emit the sweep/histogram/key-rate tables
//! the analysis machinery produces. Every run is fully determined by
//! the config file plus the seed; flags override the file.

// Negated comparisons like `!(x > 0.0)` reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod table;

use config::{ConfigViolations, ExperimentConfig, Overrides};
use recon_core::reconciliation::DecodeMethod;

#[derive(Parser)]
#[command(
    name = "recon",
    version,
    about = "Two-way CVQKD raw-data simulator and scalar-reconciliation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<DecodeMethod, String> {
    match s {
        "scalar" => Ok(DecodeMethod::Scalar),
        "vector" => Ok(DecodeMethod::Vector),
        "projection" => Ok(DecodeMethod::Projection),
        other => Err(format!(
            "unknown method {other:?}; expected scalar, vector or projection"
        )),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a correlated raw-data session (CSV plus JSON sidecar)
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reconcile a simulated session into a decode report and noise table
    Reconcile {
        #[command(flatten)]
        common: CommonArgs,
        /// Block dimension (overrides the config; comma list takes the first)
        #[arg(long = "d", value_delimiter = ',')]
        dimensions: Option<Vec<usize>>,
        /// Correction rule: scalar, vector or projection
        #[arg(long, value_parser = parse_method)]
        method: Option<DecodeMethod>,
        /// Session CSV to reconcile (defaults to <out>/raw_session.csv)
        #[arg(long)]
        session: Option<PathBuf>,
        /// Also write the classical-channel payloads to this CSV
        #[arg(long)]
        wire_out: Option<PathBuf>,
    },
    /// Logical-channel report per block dimension
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Dimensions to sweep, e.g. 2,4,8,16 (overrides the config)
        #[arg(long = "d", value_delimiter = ',')]
        dimensions: Option<Vec<usize>>,
        /// Concurrent sweep points
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Correction rule: scalar, vector or projection
        #[arg(long, value_parser = parse_method)]
        method: Option<DecodeMethod>,
    },
    /// Histograms of the raw, CDF-transformed and key-noise quantities
    Hist {
        #[command(flatten)]
        common: CommonArgs,
        /// Block dimension (overrides the config)
        #[arg(long = "d", value_delimiter = ',')]
        dimensions: Option<Vec<usize>>,
    },
    /// Secret key rate over the fiber-distance grid
    Keyrate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs, overrides: Overrides) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        anyhow::Error::new(ConfigViolations(vec![format!(
            "cannot read {}: {e}",
            common.config.display()
        )]))
    })?;
    let merged = Overrides {
        seed: common.seed.or(overrides.seed),
        out: common.out.clone().or(overrides.out),
        ..overrides
    };
    Ok(config::parse_config(&text, &merged)?)
}

fn run() -> anyhow::Result<Vec<PathBuf>> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load_config(&common, Overrides::default())?;
            commands::simulate(&cfg)
        }
        Command::Reconcile {
            common,
            dimensions,
            method,
            session,
            wire_out,
        } => {
            let cfg = load_config(
                &common,
                Overrides {
                    dimensions,
                    method,
                    ..Default::default()
                },
            )?;
            commands::reconcile(&cfg, session.as_deref(), wire_out.as_deref())
        }
        Command::Sweep {
            common,
            dimensions,
            jobs,
            method,
        } => {
            let cfg = load_config(
                &common,
                Overrides {
                    dimensions,
                    method,
                    ..Default::default()
                },
            )?;
            commands::sweep(&cfg, jobs)
        }
        Command::Hist { common, dimensions } => {
            let cfg = load_config(
                &common,
                Overrides {
                    dimensions,
                    ..Default::default()
                },
            )?;
            commands::hist(&cfg)
        }
        Command::Keyrate { common } => {
            let cfg = load_config(&common, Overrides::default())?;
            commands::keyrate(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<ConfigViolations>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
