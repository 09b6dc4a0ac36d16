//! On-disk configuration schema and its mapping to the resolved scenario.
//!
//! Keys carry explicit units (`h_m`, `dt_s`, `rho0_db`, `noise_dbm`) so a file
//! can never be misread across dB/dBm/linear conventions. Every quantity with
//! a decibel key also accepts a linear alternative; the serializer emits the
//! linear form so a round trip through text reproduces the exact values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use isac_core::channel::{db_to_linear, dbm_to_watts};
use isac_core::scenario::{ScenarioConfig, TargetState, Vec2};

use crate::CliError;

/// Raw file schema: flat key-value pairs, all optional, unknown keys rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_x_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_y_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_noise_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_noise_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_y_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_vx_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_vy_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_d_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sca_tolerance_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sca_max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback_period_slots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    /// Bob's initial state as `[x, vx, y, vy]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bob_init: Option<[f64; 4]>,
    /// Eve's waypoints as `[[x, y], ...]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_waypoints_m: Option<Vec<[f64; 2]>>,
    /// UAV start; defaults to the midpoint between Bob and Eve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uav_init_m: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_prior_mps: Option<[f64; 2]>,
}

fn conflict(db_key: &'static str, linear_key: &'static str) -> CliError {
    CliError::Config {
        message: format!("config key `{db_key}`: conflicts with `{linear_key}`; set only one"),
    }
}

/// Maps a resolved-config field name to the file key a user would recognize.
fn file_key(core_key: &str) -> &str {
    match core_key {
        "slots" => "slots",
        "dt" => "dt_s",
        "altitude" => "h_m",
        "max_speed" => "v_max_mps",
        "region_x" => "l_x_m",
        "region_y" => "l_y_m",
        "ref_gain" => "rho0_db",
        "tx_power" => "p0_dbm",
        "bob_noise" => "noise_dbm",
        "eve_noise" => "eve_noise_dbm",
        "bandwidth" => "bandwidth_hz",
        "sigma_x" => "sigma_x_m",
        "sigma_y" => "sigma_y_m",
        "sigma_vx" => "sigma_vx_mps",
        "sigma_vy" => "sigma_vy_mps",
        "sigma_range" => "sigma_d_m",
        "alpha" => "alpha",
        "sca_tolerance" => "sca_tolerance_bps",
        "sca_max_iterations" => "sca_max_iterations",
        "feedback_period" => "feedback_period_slots",
        "rng_seed" => "rng_seed",
        "bob_init" => "bob_init",
        "eve_waypoints" => "eve_waypoints_m",
        "uav_init" => "uav_init_m",
        "velocity_prior" => "velocity_prior_mps",
        other => other,
    }
}

impl FileConfig {
    /// Fills defaults, converts decibel quantities to linear scale, and
    /// validates the result.
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let defaults = ScenarioConfig::default();

        let ref_gain = match (self.rho0_db, self.rho0_linear) {
            (Some(_), Some(_)) => return Err(conflict("rho0_db", "rho0_linear")),
            (Some(db), None) => db_to_linear(db),
            (None, Some(linear)) => linear,
            (None, None) => defaults.ref_gain,
        };
        let tx_power = match (self.p0_dbm, self.p0_w) {
            (Some(_), Some(_)) => return Err(conflict("p0_dbm", "p0_w")),
            (Some(dbm), None) => dbm_to_watts(dbm),
            (None, Some(w)) => w,
            (None, None) => defaults.tx_power,
        };
        let bob_noise = match (self.noise_dbm, self.noise_w) {
            (Some(_), Some(_)) => return Err(conflict("noise_dbm", "noise_w")),
            (Some(dbm), None) => dbm_to_watts(dbm),
            (None, Some(w)) => w,
            (None, None) => defaults.bob_noise,
        };
        let eve_noise = match (self.eve_noise_dbm, self.eve_noise_w) {
            (Some(_), Some(_)) => return Err(conflict("eve_noise_dbm", "eve_noise_w")),
            (Some(dbm), None) => dbm_to_watts(dbm),
            (None, Some(w)) => w,
            (None, None) => defaults.eve_noise,
        };

        let bob_init = self
            .bob_init
            .map(|[x, vx, y, vy]| TargetState::new(x, vx, y, vy))
            .unwrap_or(defaults.bob_init);
        let eve_waypoints: Vec<Vec2> = self
            .eve_waypoints_m
            .as_ref()
            .map(|ws| ws.iter().map(|&[x, y]| Vec2::new(x, y)).collect())
            .unwrap_or(defaults.eve_waypoints);
        // start midway between Bob and Eve when not pinned explicitly
        let uav_init = self
            .uav_init_m
            .map(|[x, y]| Vec2::new(x, y))
            .unwrap_or_else(|| {
                let eve0 = eve_waypoints.first().copied().unwrap_or(Vec2::ZERO);
                (bob_init.position() + eve0) * 0.5
            });

        let cfg = ScenarioConfig {
            slots: self.slots.unwrap_or(defaults.slots),
            dt: self.dt_s.unwrap_or(defaults.dt),
            altitude: self.h_m.unwrap_or(defaults.altitude),
            max_speed: self.v_max_mps.unwrap_or(defaults.max_speed),
            region_x: self.l_x_m.unwrap_or(defaults.region_x),
            region_y: self.l_y_m.unwrap_or(defaults.region_y),
            ref_gain,
            tx_power,
            bob_noise,
            eve_noise,
            bandwidth: self.bandwidth_hz.unwrap_or(defaults.bandwidth),
            sigma_x: self.sigma_x_m.unwrap_or(defaults.sigma_x),
            sigma_y: self.sigma_y_m.unwrap_or(defaults.sigma_y),
            sigma_vx: self.sigma_vx_mps.unwrap_or(defaults.sigma_vx),
            sigma_vy: self.sigma_vy_mps.unwrap_or(defaults.sigma_vy),
            sigma_range: self.sigma_d_m.unwrap_or(defaults.sigma_range),
            alpha: self.alpha.unwrap_or(defaults.alpha),
            sca_tolerance: self.sca_tolerance_bps.unwrap_or(defaults.sca_tolerance),
            sca_max_iterations: self
                .sca_max_iterations
                .unwrap_or(defaults.sca_max_iterations),
            feedback_period: self
                .feedback_period_slots
                .unwrap_or(defaults.feedback_period),
            rng_seed: self.rng_seed.unwrap_or(defaults.rng_seed),
            bob_init,
            eve_waypoints,
            uav_init,
            velocity_prior: self
                .velocity_prior_mps
                .map(|[x, y]| Vec2::new(x, y))
                .unwrap_or(defaults.velocity_prior),
        };

        cfg.validate().map_err(|e| CliError::Config {
            message: format!("config key `{}`: {}", file_key(e.key), e.message),
        })?;
        Ok(cfg)
    }

    /// File-schema view of a resolved config, using linear-scale keys so the
    /// text form reproduces the values exactly.
    pub fn from_resolved(cfg: &ScenarioConfig) -> Self {
        Self {
            slots: Some(cfg.slots),
            dt_s: Some(cfg.dt),
            h_m: Some(cfg.altitude),
            v_max_mps: Some(cfg.max_speed),
            l_x_m: Some(cfg.region_x),
            l_y_m: Some(cfg.region_y),
            rho0_db: None,
            rho0_linear: Some(cfg.ref_gain),
            p0_dbm: None,
            p0_w: Some(cfg.tx_power),
            noise_dbm: None,
            noise_w: Some(cfg.bob_noise),
            eve_noise_dbm: None,
            eve_noise_w: Some(cfg.eve_noise),
            bandwidth_hz: Some(cfg.bandwidth),
            sigma_x_m: Some(cfg.sigma_x),
            sigma_y_m: Some(cfg.sigma_y),
            sigma_vx_mps: Some(cfg.sigma_vx),
            sigma_vy_mps: Some(cfg.sigma_vy),
            sigma_d_m: Some(cfg.sigma_range),
            alpha: Some(cfg.alpha),
            sca_tolerance_bps: Some(cfg.sca_tolerance),
            sca_max_iterations: Some(cfg.sca_max_iterations),
            feedback_period_slots: Some(cfg.feedback_period),
            rng_seed: Some(cfg.rng_seed),
            bob_init: Some([
                cfg.bob_init.x,
                cfg.bob_init.vx,
                cfg.bob_init.y,
                cfg.bob_init.vy,
            ]),
            eve_waypoints_m: Some(cfg.eve_waypoints.iter().map(|w| [w.x, w.y]).collect()),
            uav_init_m: Some([cfg.uav_init.x, cfg.uav_init.y]),
            velocity_prior_mps: Some([cfg.velocity_prior.x, cfg.velocity_prior.y]),
        }
    }
}

/// Parses the file schema and resolves it; an empty file yields the defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config {
        message: format!("config parse error: {e}"),
    })?;
    file.resolve()
}

/// Loads a configuration file from disk.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config {
        message: format!("cannot read config `{}`: {e}", path.display()),
    })?;
    parse_config(&text)
}

/// Serializes a resolved config back to the file schema.
pub fn serialize_config(cfg: &ScenarioConfig) -> Result<String, CliError> {
    toml::to_string(&FileConfig::from_resolved(cfg)).map_err(|e| CliError::Config {
        message: format!("cannot serialize config: {e}"),
    })
}
