//! Slot-by-slot orchestration: predict, optimize, move, measure, update, with
//! periodic uplink location feedback, plus the evaluation metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel;
use crate::ekf::{self, EkfError};
use crate::sca::{self, SlotTrace};
use crate::scenario::{self, ConfigError, ScenarioConfig, TargetState, Vec2};
use crate::sensing;

/// Everything logged for one time slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    /// Slot index, 2-based: slot 1 only initializes the scenario.
    pub slot: usize,
    pub bob_true: TargetState,
    pub bob_est: TargetState,
    pub eve: Vec2,
    pub uav: Vec2,
    /// Measured range from the slot's final UAV position to Bob (m).
    pub range_meas: f64,
    /// Achievable rate at Bob against true positions (bit/s).
    pub rate_bob: f64,
    /// Leakage rate at Eve against true positions (bit/s).
    pub rate_eve: f64,
    pub secrecy_raw: f64,
    pub secrecy_realized: f64,
    /// Outer-loop iterations spent on this slot.
    pub sca_iterations: usize,
    /// Horizontal estimation error after the update (m); squared and averaged
    /// across runs it yields the per-slot RMSE.
    pub rmse_contrib: f64,
}

/// Point of an empirical CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub rate: f64,
    pub probability: f64,
}

/// Complete, serializable result of one scenario run. A pure function of the
/// configuration (seed included): equal configs produce bitwise-equal
/// serializations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub records: Vec<SlotRecord>,
    /// Per-slot horizontal estimation error for this run (m).
    pub rmse_series: Vec<f64>,
    /// Empirical CDF of the realized secrecy rate over this run's slots.
    pub secrecy_cdf: Vec<CdfPoint>,
    /// Mean realized secrecy rate over this run's slots (bit/s).
    pub mean_secrecy: f64,
    /// Slots whose trajectory optimization hit the inner iteration cap.
    pub degraded_slots: Vec<usize>,
    /// Per-slot outer-loop convergence traces.
    pub sca_traces: Vec<SlotTrace>,
    pub config_echo: ScenarioConfig,
    pub seed: u64,
}

/// Per-slot RMSE across runs plus the profile within a tracking period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    /// RMSE by slot index across runs (m); entry 0 is slot 2.
    pub per_slot: Vec<f64>,
    /// RMSE by offset within the tracking period, pooled over periods and
    /// runs (m); offset 0 is the feedback slot itself.
    pub within_period: Vec<f64>,
}

/// Runs the full scenario: for every slot after the first, the filter
/// predicts Bob, the trajectory is optimized against the prediction, the UAV
/// moves, a range is measured from the new position, and the filter updates.
/// Bob feeds his true location up at the start of every tracking period.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary, ConfigError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let phi = ekf::transition_matrix(cfg.dt);
    let process_noise =
        ekf::ProcessNoise::from_std_devs(cfg.sigma_x, cfg.sigma_vx, cfg.sigma_y, cfg.sigma_vy);
    let sca_cfg = sca::ScaConfig::from_config(cfg);
    let range_var = cfg.sigma_range * cfg.sigma_range;

    let mut bob = cfg.bob_init;
    let mut uav = cfg.uav_init;
    // slot 1: the first feedback initializes the filter; no optimization yet
    let mut filter = ekf::initial_state(bob.position(), cfg.velocity_prior);

    let mut records = Vec::with_capacity(cfg.slots.saturating_sub(1));
    let mut sca_traces = Vec::with_capacity(cfg.slots.saturating_sub(1));
    let mut degraded_slots = Vec::new();

    for slot in 2..=cfg.slots {
        let mut pred = ekf::predict(&filter, &phi, &process_noise);

        let noise = scenario::sample_transition_noise(cfg, &mut rng);
        bob = scenario::step_target(&bob, cfg.dt, noise);

        // uplink location feedback at the start of each tracking period: the
        // current true location replaces the predicted position
        if (slot - 1) % cfg.feedback_period == 0 {
            pred = ekf::feedback_reset(&pred, bob.position());
        }

        let eve = scenario::eve_position(slot, &cfg.eve_waypoints, cfg.dt)?;

        let optimized = sca::sca_iterate(uav, pred.estimate.position(), eve, &sca_cfg);
        uav = optimized.position;
        if optimized.degraded {
            degraded_slots.push(slot);
        }

        let d_true = sensing::true_distance(uav, cfg.altitude, bob.position());
        let measured = sensing::measure_range(d_true, cfg.sigma_range, &mut rng);

        let obs_row = ekf::range_jacobian(&pred.estimate, uav, cfg.altitude);
        let predicted_range = sensing::true_distance(uav, cfg.altitude, pred.estimate.position());
        filter = match ekf::kalman_gain(&pred.cov, &obs_row, range_var) {
            Ok(gain) => ekf::update(&pred, &gain, &obs_row, measured, predicted_range),
            // only reachable with exact sensing; the measurement then adds
            // no information and the prediction passes through
            Err(EkfError::DegenerateInnovation { .. }) => pred,
        };

        let gain_bob = channel::channel_gain(uav, cfg.altitude, bob.position(), cfg.ref_gain);
        let rate_bob =
            channel::achievable_rate(cfg.tx_power, gain_bob, cfg.bob_noise, cfg.bandwidth);
        let gain_eve = channel::channel_gain(uav, cfg.altitude, eve, cfg.ref_gain);
        let rate_eve =
            channel::achievable_rate(cfg.tx_power, gain_eve, cfg.eve_noise, cfg.bandwidth);
        let secrecy = channel::secrecy_rate(rate_bob, rate_eve);

        records.push(SlotRecord {
            slot,
            bob_true: bob,
            bob_est: filter.estimate,
            eve,
            uav,
            range_meas: measured,
            rate_bob,
            rate_eve,
            secrecy_raw: secrecy.raw,
            secrecy_realized: secrecy.realized,
            sca_iterations: optimized.iterations,
            rmse_contrib: (filter.estimate.position() - bob.position()).norm(),
        });
        sca_traces.push(SlotTrace {
            slot,
            objectives: optimized.trace,
        });
    }

    let rmse_series: Vec<f64> = records.iter().map(|r| r.rmse_contrib).collect();
    let realized: Vec<f64> = records.iter().map(|r| r.secrecy_realized).collect();
    let mean_secrecy = if realized.is_empty() {
        0.0
    } else {
        realized.iter().sum::<f64>() / realized.len() as f64
    };

    Ok(RunSummary {
        secrecy_cdf: secrecy_cdf(&realized),
        records,
        rmse_series,
        mean_secrecy,
        degraded_slots,
        sca_traces,
        config_echo: cfg.clone(),
        seed: cfg.rng_seed,
    })
}

/// Monte-Carlo repetition: run k = 0..runs with seeds `rng_seed + k`.
/// Repetitions are independent and execute in parallel; the output order is
/// by repetition index, so results stay deterministic.
pub fn run_batch(cfg: &ScenarioConfig, runs: usize) -> Result<Vec<RunSummary>, ConfigError> {
    cfg.validate()?;
    (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut rep = cfg.clone();
            rep.rng_seed = cfg.rng_seed.wrapping_add(k as u64);
            run_scenario(&rep)
        })
        .collect()
}

/// Root-mean-square positional estimation error per slot across runs, plus
/// the saw-tooth profile within one tracking period of `window` slots.
pub fn compute_rmse(runs: &[RunSummary], window: usize) -> RmseReport {
    let slots = runs.iter().map(|r| r.records.len()).max().unwrap_or(0);
    let mut per_slot = Vec::with_capacity(slots);
    for i in 0..slots {
        let sq: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.records.get(i))
            .map(|rec| rec.rmse_contrib * rec.rmse_contrib)
            .collect();
        per_slot.push((sq.iter().sum::<f64>() / sq.len() as f64).sqrt());
    }

    let mut within = vec![(0.0f64, 0usize); window.max(1)];
    for run in runs {
        for rec in &run.records {
            let offset = (rec.slot - 1) % window.max(1);
            within[offset].0 += rec.rmse_contrib * rec.rmse_contrib;
            within[offset].1 += 1;
        }
    }
    let within_period = within
        .into_iter()
        .map(|(sum, n)| if n == 0 { 0.0 } else { (sum / n as f64).sqrt() })
        .collect();

    RmseReport {
        per_slot,
        within_period,
    }
}

/// Empirical CDF of a pooled sample, ascending, with probabilities k/n and
/// duplicate values merged onto their highest step.
pub fn secrecy_cdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("rates must not be NaN"));
    let n = sorted.len();
    let mut points: Vec<CdfPoint> = Vec::new();
    for (i, value) in sorted.iter().enumerate() {
        let probability = (i + 1) as f64 / n as f64;
        match points.last_mut() {
            Some(last) if last.rate == *value => last.probability = probability,
            _ => points.push(CdfPoint {
                rate: *value,
                probability,
            }),
        }
    }
    points
}

/// Pools the realized secrecy rates of several runs into one CDF.
pub fn pooled_secrecy_cdf(runs: &[RunSummary]) -> Vec<CdfPoint> {
    let pool: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.records.iter().map(|rec| rec.secrecy_realized))
        .collect();
    secrecy_cdf(&pool)
}
