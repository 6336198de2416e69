use std::path::PathBuf;
use std::process::ExitCode;

use chaosae::config::{self, CliOverrides, Scale};
use chaosae::pipeline::{self, LleMode, SweepMode};
use chaosae::{report, HarnessError};
use clap::{Args, Parser, Subcommand};

/// Sparse-autoencoder reconstruction of chaotic time series.
///
/// Configuration keys can also be set through `CHAOSAE_<KEY>` environment
/// variables, with `__` separating nested keys (e.g. `CHAOSAE_TRAIN__EPOCHS=50`).
#[derive(Debug, Parser)]
#[command(name = "chaosae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; `//` and `/* */` comments are allowed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for weight init, shuffling and twin-pair starts.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scale: Option<Scale>,
    /// Suppress progress output on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the configured system and write its trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Train one autoencoder and write the model and loss curves.
    Train {
        #[command(flatten)]
        common: Common,
        /// Also export the train and test windows.
        #[arg(long)]
        save_datasets: bool,
    },
    /// Train one model per grid value and tabulate the latent statistics.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: SweepMode,
    },
    /// Largest Lyapunov exponents of raw or reconstructed twin trajectories.
    Lle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: LleMode,
        /// Which sweep's models feed reconstructed mode.
        #[arg(long, value_enum, default_value = "alpha")]
        grid: SweepMode,
    },
    /// Collect all outputs into report/summary.json and SVG plots.
    Report {
        #[command(flatten)]
        common: Common,
    },
    /// Print the effective configuration as JSON.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common }
            | Command::Train { common, .. }
            | Command::Sweep { common, .. }
            | Command::Lle { common, .. }
            | Command::Report { common }
            | Command::Config { common } => common,
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let common = cli.command.common();
    let overrides = CliOverrides { out: common.out.clone(), seed: common.seed, scale: common.scale };
    let cfg = config::load(common.config.as_deref(), &overrides)?;
    let quiet = common.quiet;
    let mut log = |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match cli.command {
        Command::Simulate { .. } => {
            let path = pipeline::run_simulate(&cfg, &mut log)?;
            println!("{}", path.display());
        }
        Command::Train { save_datasets, .. } => {
            let s = pipeline::run_train(&cfg, save_datasets, &mut log)?;
            println!(
                "test_mse={:e} mean_active={} std_active={}",
                s.final_test_mse, s.stats.mean_active_nodes, s.stats.std_active_nodes
            );
        }
        Command::Sweep { mode, .. } => {
            let meta = pipeline::run_sweep(&cfg, mode, &mut log)?;
            let failed = meta.failures();
            if failed > 0 {
                let first = meta.cells.iter().find_map(|c| c.error.as_ref().map(|e| format!("{}: {e}", c.label)));
                return Err(HarnessError::Core(chaosae_core::Error::Degenerate(format!(
                    "{failed} of {} sweep cells failed (first: {})",
                    meta.cells.len(),
                    first.unwrap_or_default()
                ))));
            }
        }
        Command::Lle { mode, grid, .. } => {
            for r in pipeline::run_lle(&cfg, mode, grid, &mut log)? {
                let cell = r.alpha_or_w.map_or_else(String::new, |v| v.to_string());
                println!("{} {} {} {} {:.4} {:.4}", r.system, r.sequence, cell, r.coordinate, r.lle_mean, r.lle_std);
            }
        }
        Command::Report { .. } => {
            let summary = report::run_report(&cfg)?;
            let missing = summary["missing"].as_array().map_or(0, Vec::len);
            if missing > 0 {
                log(&format!("{missing} expected inputs missing; see report/summary.json"));
            }
            println!("{}", cfg.output_dir.join("report").join("summary.json").display());
        }
        Command::Config { .. } => println!("{}", cfg.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
