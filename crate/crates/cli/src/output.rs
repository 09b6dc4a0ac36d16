//! Output bundle: plot-ready tables (CSV and/or a JSON mirror) plus a
//! manifest that suffices to reproduce the run bitwise.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use isac_core::runner::{compute_rmse, pooled_secrecy_cdf, RunSummary};

use crate::CliError;

/// Which table formats to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Both,
}

impl Emit {
    fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }
    fn json(self) -> bool {
        matches!(self, Emit::Json | Emit::Both)
    }
}

/// Reproduction record written next to the tables. Feeding `config_toml` back
/// through `--config` replays the identical bundle.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub runs: usize,
    pub emit: String,
    pub trace: bool,
    pub config_toml: String,
}

#[derive(Debug, Clone, Serialize)]
struct TrajectoryRow {
    run: usize,
    slot: usize,
    x_true: f64,
    y_true: f64,
    x_est: f64,
    y_est: f64,
    x_uav: f64,
    y_uav: f64,
    x_eve: f64,
    y_eve: f64,
    range_meas: f64,
    r_bob: f64,
    r_eve: f64,
    secrecy_raw: f64,
    secrecy_realized: f64,
    sca_iters: usize,
}

#[derive(Debug, Clone, Serialize)]
struct RateRow {
    run: usize,
    slot: usize,
    r_bob: f64,
    r_eve: f64,
    secrecy_raw: f64,
    secrecy_realized: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RmseRow {
    slot: usize,
    rmse_m: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CdfRow {
    rate_bps: f64,
    probability: f64,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    run: usize,
    slot: usize,
    iteration: usize,
    objective_bps: f64,
}

#[derive(Debug, Serialize)]
struct JsonMirror<'a> {
    trajectory: &'a [TrajectoryRow],
    rates: &'a [RateRow],
    rmse: &'a [RmseRow],
    cdf: &'a [CdfRow],
    sca_trace: &'a [TraceRow],
}

#[derive(Debug, Default)]
struct Tables {
    trajectory: Vec<TrajectoryRow>,
    rates: Vec<RateRow>,
    rmse: Vec<RmseRow>,
    cdf: Vec<CdfRow>,
    traces: Vec<TraceRow>,
}

fn build_rows(summaries: &[RunSummary], trace_enabled: bool) -> Tables {
    let mut trajectory = Vec::new();
    let mut rates = Vec::new();
    let mut traces = Vec::new();
    for (run, summary) in summaries.iter().enumerate() {
        for rec in &summary.records {
            trajectory.push(TrajectoryRow {
                run,
                slot: rec.slot,
                x_true: rec.bob_true.x,
                y_true: rec.bob_true.y,
                x_est: rec.bob_est.x,
                y_est: rec.bob_est.y,
                x_uav: rec.uav.x,
                y_uav: rec.uav.y,
                x_eve: rec.eve.x,
                y_eve: rec.eve.y,
                range_meas: rec.range_meas,
                r_bob: rec.rate_bob,
                r_eve: rec.rate_eve,
                secrecy_raw: rec.secrecy_raw,
                secrecy_realized: rec.secrecy_realized,
                sca_iters: rec.sca_iterations,
            });
            rates.push(RateRow {
                run,
                slot: rec.slot,
                r_bob: rec.rate_bob,
                r_eve: rec.rate_eve,
                secrecy_raw: rec.secrecy_raw,
                secrecy_realized: rec.secrecy_realized,
            });
        }
        if trace_enabled {
            for trace in &summary.sca_traces {
                for (iteration, objective) in trace.objectives.iter().enumerate() {
                    traces.push(TraceRow {
                        run,
                        slot: trace.slot,
                        iteration,
                        objective_bps: *objective,
                    });
                }
            }
        }
    }

    let feedback_period = summaries
        .first()
        .map(|s| s.config_echo.feedback_period)
        .unwrap_or(1);
    let rmse = compute_rmse(summaries, feedback_period)
        .per_slot
        .iter()
        .enumerate()
        .map(|(i, &rmse_m)| RmseRow {
            slot: i + 2, // records start at slot 2
            rmse_m,
        })
        .collect();

    let cdf = pooled_secrecy_cdf(summaries)
        .iter()
        .map(|p| CdfRow {
            rate_bps: p.rate,
            probability: p.probability,
        })
        .collect();

    Tables {
        trajectory,
        rates,
        rmse,
        cdf,
        traces,
    }
}

/// Writes one table with an explicit header row, present even when the table
/// is empty.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), CliError> {
    let io_err = |e: &dyn std::fmt::Display| CliError::Io {
        message: format!("cannot write `{}`: {e}", path.display()),
    };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_err(&e))?;
    writer.write_record(header).map_err(|e| io_err(&e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| io_err(&e))?;
    }
    writer.flush().map_err(|e| io_err(&e))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        message: format!("cannot write `{}`: {e}", path.display()),
    })
}

/// Writes the bundle under `dir` and returns the files created.
pub fn write_bundle(
    dir: &Path,
    summaries: &[RunSummary],
    emit: Emit,
    trace_enabled: bool,
    manifest: &Manifest,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        message: format!("cannot create output dir `{}`: {e}", dir.display()),
    })?;

    let tables = build_rows(summaries, trace_enabled);
    let mut files = Vec::new();

    if emit.csv() {
        let path = dir.join("trajectory.csv");
        write_csv(
            &path,
            &[
                "run",
                "slot",
                "x_true",
                "y_true",
                "x_est",
                "y_est",
                "x_uav",
                "y_uav",
                "x_eve",
                "y_eve",
                "range_meas",
                "r_bob",
                "r_eve",
                "secrecy_raw",
                "secrecy_realized",
                "sca_iters",
            ],
            &tables.trajectory,
        )?;
        files.push(path);

        let path = dir.join("rates.csv");
        write_csv(
            &path,
            &[
                "run",
                "slot",
                "r_bob",
                "r_eve",
                "secrecy_raw",
                "secrecy_realized",
            ],
            &tables.rates,
        )?;
        files.push(path);

        let path = dir.join("rmse.csv");
        write_csv(&path, &["slot", "rmse_m"], &tables.rmse)?;
        files.push(path);

        let path = dir.join("cdf.csv");
        write_csv(&path, &["rate_bps", "probability"], &tables.cdf)?;
        files.push(path);

        let path = dir.join("sca_trace.csv");
        write_csv(
            &path,
            &["run", "slot", "iteration", "objective_bps"],
            &tables.traces,
        )?;
        files.push(path);
    }

    if emit.json() {
        let mirror = JsonMirror {
            trajectory: &tables.trajectory,
            rates: &tables.rates,
            rmse: &tables.rmse,
            cdf: &tables.cdf,
            sca_trace: &tables.traces,
        };
        let path = dir.join("results.json");
        let body = serde_json::to_string(&mirror).map_err(|e| CliError::Io {
            message: format!("cannot serialize results: {e}"),
        })?;
        write_text(&path, &body)?;
        files.push(path);
    }

    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io {
        message: format!("cannot serialize manifest: {e}"),
    })?;
    write_text(&path, &body)?;
    files.push(path);

    Ok(files)
}
