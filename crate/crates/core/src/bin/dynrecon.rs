//! Command-line entry point for the reconstruction experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dynrecon::harness::{
    cmd_iterstudy, cmd_metrics, cmd_phantom, cmd_reconstruct, cmd_sweep, ExperimentConfig,
    HarnessError,
};

#[derive(Parser)]
#[command(name = "dynrecon", version, about = "Sparse reconstruction of dynamic inverse problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the noise seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sweep cells (0 = all cores).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Overwrite outputs even if they were written under a different config.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the ground-truth phantom stack and per-frame previews.
    Phantom {
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct with the configured solver and score the result.
    Reconstruct {
        #[command(flatten)]
        common: Common,
    },
    /// Run the hyper-parameter grid and write the metrics table and heatmap.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Record per-outer-iteration SSIM curves for each inner-iteration cap.
    Iterstudy {
        #[command(flatten)]
        common: Common,
    },
    /// Score a serialized reconstruction against a reference stack.
    Metrics {
        /// Reconstruction array (real or complex).
        recon: PathBuf,
        /// Reference array (real).
        reference: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        config.outputs.dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.noise.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run() -> Result<(), HarnessError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Phantom { common } => {
            let config = load_config(common)?;
            let files = cmd_phantom(&config, common.force)?;
            println!("wrote {} files to {}", files.len(), config.outputs.dir.display());
        }
        Command::Reconstruct { common } => {
            let config = load_config(common)?;
            let record = cmd_reconstruct(&config, common.force)?;
            println!(
                "run {}: solver={} ssim={:.6} nrmse={:.6} outer={} wall_ms={:.1}",
                record.run_id,
                record.solver,
                record.ssim_t_avg,
                record.nrmse,
                record.outer_iters,
                record.wall_ms
            );
        }
        Command::Sweep { common } => {
            let config = load_config(common)?;
            let records = cmd_sweep(&config, common.jobs, common.force)?;
            let best = records
                .iter()
                .filter(|r| !r.ssim_t_avg.is_nan())
                .max_by(|a, b| a.ssim_t_avg.total_cmp(&b.ssim_t_avg));
            match best {
                Some(r) => println!(
                    "{} cells; best ssim={:.6} at ({}, {})",
                    records.len(),
                    r.ssim_t_avg,
                    r.eta_or_mu_s,
                    r.theta_or_mu_t
                ),
                None => println!("{} cells; no successful runs", records.len()),
            }
        }
        Command::Iterstudy { common } => {
            let config = load_config(common)?;
            let rows = cmd_iterstudy(&config, common.force)?;
            println!("wrote {rows} study rows to {}", config.outputs.dir.display());
        }
        Command::Metrics {
            recon,
            reference,
            common,
        } => {
            let config = load_config(common)?;
            let (ssim, nrmse) =
                cmd_metrics(recon, reference, &config, common.out.as_deref(), common.force)?;
            println!("ssim_t_avg={ssim} nrmse={nrmse}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
