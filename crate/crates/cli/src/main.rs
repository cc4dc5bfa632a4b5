use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use qtherm::harness::{self, OutputBundle, ResolvedRun, RunConfig, Threads};

#[derive(Parser)]
#[command(
    name = "qtherm",
    version,
    about = "Quantum-trajectory thermodynamics of a monitored qubit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in transmon defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trajectories (overrides the config)
    #[arg(long)]
    trajectories: Option<usize>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads: a positive integer or `auto`
    #[arg(long, default_value = "auto")]
    threads: Threads,
}

#[derive(Subcommand)]
enum Command {
    /// Forward ensemble: trajectories.csv, endpoints.csv, summary.json
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Detailed fluctuation check: ft_points.csv and the fitted slope
    FtCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Entropy-production histogram at one recorded time
    Histogram {
        #[command(flatten)]
        common: Common,
        /// Mean resonator photon number
        #[arg(long)]
        nbar: Option<f64>,
        /// Time in µs; must be a recorded time
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Efficacy against γ₁/κ with a weighted regression
    EfficacySweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated damping ratios
        #[arg(long, value_delimiter = ',', required = true)]
        gamma1_over_kappa: Vec<f64>,
    },
    /// Closed-system two-point-measurement table
    Tpm {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, patch: impl FnOnce(&mut RunConfig)) -> Result<ResolvedRun> {
    let mut cfg = match &common.config {
        Some(path) => harness::parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = common.trajectories {
        cfg.trajectories = n;
    }
    if let Some(dir) = &common.out_dir {
        cfg.output_dir = dir.clone();
    }
    patch(&mut cfg);
    let run = cfg.resolve().context("invalid run configuration")?;
    info!(
        "Γ_d = {:.6} rad/µs, δt = {:.6e} µs, {} steps, {} trajectories",
        run.model.gamma_d, run.trajectory.dt, run.steps, run.config.trajectories
    );
    Ok(run)
}

fn report(bundle: &OutputBundle) {
    for f in &bundle.files {
        println!("{}", bundle.path(&f.name).display());
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let bundle = match cli.command {
        Command::Simulate { common } => {
            let run = load(&common, |_| {})?;
            harness::simulate(&run, common.threads)?.1
        }
        Command::FtCheck { common } => {
            let run = load(&common, |_| {})?;
            harness::ft_check(&run, common.threads)?
        }
        Command::Histogram {
            common,
            nbar,
            time,
            bins,
        } => {
            let run = load(&common, |c| {
                if let Some(n) = nbar {
                    c.nbar = n;
                }
            })?;
            let t = time.unwrap_or(run.grid.duration());
            harness::histogram(&run, common.threads, t, bins)?
        }
        Command::EfficacySweep {
            common,
            gamma1_over_kappa,
        } => {
            let run = load(&common, |_| {})?;
            harness::efficacy_sweep(&run, &gamma1_over_kappa, common.threads)?
        }
        Command::Tpm { common } => {
            let run = load(&common, |_| {})?;
            harness::tpm(&run)?
        }
    };
    report(&bundle);
    Ok(())
}
