use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gsoid::cli::{run_fit, run_synthetic, StartsSpec};

#[derive(Parser)]
#[command(name = "gsoid", version, about = "Joint graph filter and shift operator identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic experiment, fit it and compare against ground truth.
    Synthetic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "defaults+candidates")]
        starts: StartsSpec,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit input/output signals on a given support.
    Fit {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        support: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "defaults+candidates")]
        starts: StartsSpec,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synthetic {
            spec,
            config,
            out,
            starts,
            seed,
        } => run_synthetic(spec, config.as_deref(), out, starts, *seed),
        Command::Fit {
            x,
            y,
            support,
            config,
            out,
            starts,
        } => run_fit(x, y, support, config.as_deref(), out, starts),
    };
    match result {
        Ok(report) => {
            println!(
                "best start {} ({}): final NMSE {:.3e}, cost {:.6e}",
                report.best_start, report.best_label, report.final_nmse, report.final_cost
            );
            if let Some(r) = report.spearman {
                println!("spearman r_s = {r:.4}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.error);
            ExitCode::from(e.exit_code as u8)
        }
    }
}
