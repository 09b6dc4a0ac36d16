//! Command entry points: configuration loading, scenario execution, and the
//! output bundle. The binary in `main.rs` is a thin wrapper over
//! [`run_command`] so the whole surface stays testable in-process.

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use isac_core::runner::{self, compute_rmse};
use isac_core::scenario::ScenarioConfig;

pub use config::{load_config, parse_config, serialize_config, FileConfig};
pub use output::{write_bundle, Emit, Manifest};

/// Environment variable consulted for the seed when `--seed` is absent.
pub const SEED_ENV_VAR: &str = "ISAC_SEED";

#[derive(Debug, Clone, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { message: String },
    #[error("{message}")]
    Io { message: String },
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    /// Solver degradation maps to 3 in `main`, with the bundle still written.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 1,
        }
    }
}

/// Resolved command-line request.
#[derive(Debug, Clone)]
pub struct RunFlags {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub runs: usize,
    pub out: PathBuf,
    pub emit: Emit,
    pub trace: bool,
}

/// What `run_command` reports back for the one-line summary.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub mean_secrecy: f64,
    pub mean_rmse: f64,
    pub elapsed: Duration,
    /// True when any slot's optimizer hit its inner iteration cap.
    pub degraded: bool,
    pub files: Vec<PathBuf>,
}

/// Applies flag and environment overrides on top of the loaded config.
pub fn effective_config(flags: &RunFlags) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => config::load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = flags.seed {
        cfg.rng_seed = seed;
    } else if let Ok(value) = std::env::var(SEED_ENV_VAR) {
        cfg.rng_seed = value.parse().map_err(|_| CliError::Config {
            message: format!("config key `rng_seed`: {SEED_ENV_VAR}=`{value}` is not an integer"),
        })?;
    }
    if let Some(alpha) = flags.alpha {
        cfg.alpha = alpha;
    }
    cfg.validate().map_err(|e| CliError::Config {
        message: e.to_string(),
    })?;
    Ok(cfg)
}

/// Runs the scenario (repeated `runs` times with consecutive seeds), writes
/// the bundle, and returns the headline numbers.
pub fn run_command(flags: &RunFlags) -> Result<RunReport, CliError> {
    if flags.runs == 0 {
        return Err(CliError::Config {
            message: "config key `runs`: must be at least 1".into(),
        });
    }
    let cfg = effective_config(flags)?;
    let started = Instant::now();

    let summaries = runner::run_batch(&cfg, flags.runs).map_err(|e| CliError::Config {
        message: e.to_string(),
    })?;

    let manifest = Manifest {
        tool: "isac-sim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.rng_seed,
        runs: flags.runs,
        emit: format!("{:?}", flags.emit).to_lowercase(),
        trace: flags.trace,
        config_toml: config::serialize_config(&cfg)?,
    };
    let files = output::write_bundle(&flags.out, &summaries, flags.emit, flags.trace, &manifest)?;

    let rmse = compute_rmse(&summaries, cfg.feedback_period);
    let mean_rmse = if rmse.per_slot.is_empty() {
        0.0
    } else {
        rmse.per_slot.iter().sum::<f64>() / rmse.per_slot.len() as f64
    };
    let pooled: Vec<f64> = summaries
        .iter()
        .flat_map(|s| s.records.iter().map(|r| r.secrecy_realized))
        .collect();
    let mean_secrecy = if pooled.is_empty() {
        0.0
    } else {
        pooled.iter().sum::<f64>() / pooled.len() as f64
    };
    let degraded = summaries.iter().any(|s| !s.degraded_slots.is_empty());

    Ok(RunReport {
        mean_secrecy,
        mean_rmse,
        elapsed: started.elapsed(),
        degraded,
        files,
    })
}
