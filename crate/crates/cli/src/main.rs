use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use isac_cli::{run_command, Emit, RunFlags};

/// Secure-ISAC UAV trajectory simulator: tracks a moving user from noisy
/// range measurements and re-optimizes the UAV position once per time slot.
#[derive(Debug, Parser)]
#[command(name = "isac-sim", version)]
struct Cli {
    /// Scenario configuration file (TOML); omit for the built-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed override (falls back to ISAC_SEED, then the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Rate-vs-leakage weight override in [0, 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Monte-Carlo repetitions, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Output directory for the bundle
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Table formats to write
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    emit: Emit,
    /// Record per-slot optimizer convergence traces
    #[arg(long)]
    trace: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = RunFlags {
        config: cli.config,
        seed: cli.seed,
        alpha: cli.alpha,
        runs: cli.runs,
        out: cli.out,
        emit: cli.emit,
        trace: cli.trace,
    };
    match run_command(&flags) {
        Ok(report) => {
            println!(
                "mean_secrecy_bps={:.3} mean_rmse_m={:.4} wall_s={:.3} files={}",
                report.mean_secrecy,
                report.mean_rmse,
                report.elapsed.as_secs_f64(),
                report.files.len()
            );
            if report.degraded {
                eprintln!("warning: trajectory solver hit its iteration cap on some slots");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
