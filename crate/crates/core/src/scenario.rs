//! Ground-truth world state: Bob's stochastic kinematics, Eve's preset path,
//! the UAV pose, and the master simulation configuration.

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed at which Eve traverses her waypoint polyline (m/s).
pub const EVE_SPEED_MPS: f64 = 10.0;

/// A configuration value outside its domain, keyed by the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: &'static str,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &'static str, message: impl Into<String>) -> Self {
        Self {
            key,
            message: message.into(),
        }
    }
}

/// 2-D horizontal coordinate in meters, or velocity in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Kinematic state `[x, vx, y, vy]` of the tracked user (m, m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl TargetState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        Self { x, vx, y, vy }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }
}

/// All physical, noise, optimizer, and schedule parameters for one scenario.
///
/// Gains and powers are linear scale (W); dB/dBm conversion happens once at
/// config load, never inside the simulation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of time slots N.
    pub slots: usize,
    /// Slot duration (s).
    pub dt: f64,
    /// Fixed UAV altitude (m).
    pub altitude: f64,
    /// Maximum UAV horizontal speed (m/s).
    pub max_speed: f64,
    /// Operating rectangle extent along x (m).
    pub region_x: f64,
    /// Operating rectangle extent along y (m).
    pub region_y: f64,
    /// Channel power gain at 1 m reference distance (linear).
    pub ref_gain: f64,
    /// Transmit power (W).
    pub tx_power: f64,
    /// Receiver noise power at Bob (W).
    pub bob_noise: f64,
    /// Receiver noise power at Eve (W).
    pub eve_noise: f64,
    /// Channel bandwidth (Hz).
    pub bandwidth: f64,
    /// Position transition noise standard deviation along x (m).
    pub sigma_x: f64,
    /// Position transition noise standard deviation along y (m).
    pub sigma_y: f64,
    /// Velocity transition noise standard deviation along x (m/s).
    pub sigma_vx: f64,
    /// Velocity transition noise standard deviation along y (m/s).
    pub sigma_vy: f64,
    /// Range measurement noise standard deviation (m).
    pub sigma_range: f64,
    /// Rate-vs-leakage weight in [0, 1]; 1 favors Bob's rate, 0 favors
    /// suppressing the leakage to Eve.
    pub alpha: f64,
    /// Outer-loop termination tolerance on the objective change (bit/s).
    pub sca_tolerance: f64,
    /// Outer-loop iteration cap per slot.
    pub sca_max_iterations: usize,
    /// Slots between uplink location feedbacks (tracking period length).
    pub feedback_period: usize,
    /// Seed for the run's random generator.
    pub rng_seed: u64,
    /// Bob's true initial state.
    pub bob_init: TargetState,
    /// Eve's path as a polyline traversed at [`EVE_SPEED_MPS`].
    pub eve_waypoints: Vec<Vec2>,
    /// UAV starting position.
    pub uav_init: Vec2,
    /// Filter velocity guess before the first measurement (m/s).
    pub velocity_prior: Vec2,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            slots: 100,
            dt: 0.1,          // s
            altitude: 50.0,   // m
            max_speed: 50.0,  // m/s
            region_x: 1000.0, // m
            region_y: 1000.0, // m
            ref_gain: 1e-6,   // -60 dB
            tx_power: 0.1,    // 20 dBm
            bob_noise: 1e-13, // -100 dBm
            eve_noise: 1e-13, // -100 dBm
            bandwidth: 1e6,   // Hz
            sigma_x: 1.0,     // m
            sigma_y: 1.0,     // m
            sigma_vx: 0.5,    // m/s
            sigma_vy: 0.5,    // m/s
            sigma_range: 2.0, // m
            alpha: 0.5,
            sca_tolerance: 1e3, // bit/s
            sca_max_iterations: 20,
            feedback_period: 10,
            rng_seed: 1,
            bob_init: TargetState::new(350.0, 10.0, 470.0, 10.0),
            eve_waypoints: vec![Vec2::new(550.0, 450.0), Vec2::new(650.0, 550.0)],
            uav_init: Vec2::new(450.0, 460.0),
            velocity_prior: Vec2::ZERO,
        }
    }
}

impl ScenarioConfig {
    /// Total flight duration T = N * dt (s).
    pub fn duration(&self) -> f64 {
        self.slots as f64 * self.dt
    }

    /// Checks every domain constraint, naming the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &'static str, value: f64) -> Result<(), ConfigError> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(key, "must be positive and finite"))
            }
        }
        fn nonnegative(key: &'static str, value: f64) -> Result<(), ConfigError> {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(key, "must be nonnegative and finite"))
            }
        }

        if self.slots < 1 {
            return Err(ConfigError::new("slots", "must be at least 1"));
        }
        positive("dt", self.dt)?;
        positive("altitude", self.altitude)?;
        nonnegative("max_speed", self.max_speed)?;
        positive("region_x", self.region_x)?;
        positive("region_y", self.region_y)?;
        positive("ref_gain", self.ref_gain)?;
        positive("tx_power", self.tx_power)?;
        positive("bob_noise", self.bob_noise)?;
        positive("eve_noise", self.eve_noise)?;
        positive("bandwidth", self.bandwidth)?;
        nonnegative("sigma_x", self.sigma_x)?;
        nonnegative("sigma_y", self.sigma_y)?;
        nonnegative("sigma_vx", self.sigma_vx)?;
        nonnegative("sigma_vy", self.sigma_vy)?;
        nonnegative("sigma_range", self.sigma_range)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::new("alpha", "must lie in [0, 1]"));
        }
        if self.sca_tolerance.is_nan() || self.sca_tolerance < 0.0 {
            return Err(ConfigError::new("sca_tolerance", "must be nonnegative"));
        }
        if self.sca_max_iterations < 1 {
            return Err(ConfigError::new("sca_max_iterations", "must be at least 1"));
        }
        if self.feedback_period < 1 {
            return Err(ConfigError::new("feedback_period", "must be at least 1"));
        }
        if self.eve_waypoints.is_empty() {
            return Err(ConfigError::new(
                "eve_waypoints",
                "must contain at least one waypoint",
            ));
        }
        if !self.eve_waypoints.iter().all(|w| w.is_finite()) {
            return Err(ConfigError::new(
                "eve_waypoints",
                "components must be finite",
            ));
        }
        if !self.uav_init.is_finite()
            || !(0.0..=self.region_x).contains(&self.uav_init.x)
            || !(0.0..=self.region_y).contains(&self.uav_init.y)
        {
            return Err(ConfigError::new(
                "uav_init",
                "must lie inside the operating rectangle",
            ));
        }
        if ![
            self.bob_init.x,
            self.bob_init.vx,
            self.bob_init.y,
            self.bob_init.vy,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return Err(ConfigError::new("bob_init", "components must be finite"));
        }
        if !self.velocity_prior.is_finite() {
            return Err(ConfigError::new(
                "velocity_prior",
                "components must be finite",
            ));
        }
        Ok(())
    }
}

/// Advances Bob's state one slot under the constant-velocity model with an
/// additive transition noise vector `[wx, wvx, wy, wvy]`.
pub fn step_target(state: &TargetState, dt: f64, noise: [f64; 4]) -> TargetState {
    TargetState {
        x: state.x + state.vx * dt + noise[0],
        vx: state.vx + noise[1],
        y: state.y + state.vy * dt + noise[2],
        vy: state.vy + noise[3],
    }
}

/// Draws one slot's transition noise `[wx, wvx, wy, wvy]` from the seeded
/// generator. The draw order is fixed; determinism depends on it.
pub fn sample_transition_noise<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> [f64; 4] {
    let z: [f64; 4] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    [
        cfg.sigma_x * z[0],
        cfg.sigma_vx * z[1],
        cfg.sigma_y * z[2],
        cfg.sigma_vy * z[3],
    ]
}

/// Eve's position at slot `n` (1-based): the waypoint polyline traversed at
/// [`EVE_SPEED_MPS`], held at the last waypoint once the path is exhausted.
pub fn eve_position(n: usize, waypoints: &[Vec2], dt: f64) -> Result<Vec2, ConfigError> {
    let first = *waypoints
        .first()
        .ok_or_else(|| ConfigError::new("eve_waypoints", "must contain at least one waypoint"))?;
    let mut remaining = (n.saturating_sub(1)) as f64 * dt * EVE_SPEED_MPS;
    let mut pos = first;
    for &next in &waypoints[1..] {
        let leg = (next - pos).norm();
        if leg <= 0.0 {
            pos = next;
            continue;
        }
        if remaining < leg {
            return Ok(pos + (next - pos) * (remaining / leg));
        }
        remaining -= leg;
        pos = next;
    }
    Ok(pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_zero_noise_constant_velocity() {
        let s = step_target(&TargetState::new(0.0, 10.0, 0.0, 10.0), 0.1, [0.0; 4]);
        assert_eq!(s, TargetState::new(1.0, 10.0, 1.0, 10.0));
    }

    #[test]
    fn step_from_default_initial_state() {
        let s = step_target(&TargetState::new(350.0, 10.0, 470.0, 10.0), 0.1, [0.0; 4]);
        assert_eq!(s, TargetState::new(351.0, 10.0, 471.0, 10.0));
    }

    #[test]
    fn step_pure_noise_injection() {
        let s = step_target(
            &TargetState::new(0.0, 0.0, 0.0, 0.0),
            0.1,
            [1.0, 0.5, -1.0, -0.5],
        );
        assert_eq!(s, TargetState::new(1.0, 0.5, -1.0, -0.5));
    }

    #[test]
    fn eve_static_single_waypoint() {
        let w = vec![Vec2::new(500.0, 500.0)];
        for n in [1, 7, 1000] {
            assert_eq!(eve_position(n, &w, 0.1).unwrap(), Vec2::new(500.0, 500.0));
        }
    }

    #[test]
    fn eve_midpoint_interpolation() {
        // 10 m leg at 10 m/s: reached at t = 1 s; at t = 0.5 s she is halfway.
        let w = vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)];
        // n = 6 with dt = 0.1 gives t = 0.5 s
        assert_eq!(eve_position(6, &w, 0.1).unwrap(), Vec2::new(5.0, 0.0));
    }

    #[test]
    fn eve_clamps_to_last_waypoint() {
        let w = vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)];
        assert_eq!(eve_position(500, &w, 0.1).unwrap(), Vec2::new(10.0, 0.0));
    }

    #[test]
    fn eve_empty_waypoints_is_config_error() {
        let err = eve_position(1, &[], 0.1).unwrap_err();
        assert_eq!(err.key, "eve_waypoints");
    }

    #[test]
    fn eve_skips_duplicate_waypoints() {
        let w = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
        ];
        assert_eq!(eve_position(6, &w, 0.1).unwrap(), Vec2::new(5.0, 0.0));
    }

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn validate_names_offending_key() {
        let cases = [
            (
                ScenarioConfig {
                    alpha: 1.5,
                    ..ScenarioConfig::default()
                },
                "alpha",
            ),
            (
                ScenarioConfig {
                    eve_waypoints: vec![],
                    ..ScenarioConfig::default()
                },
                "eve_waypoints",
            ),
            (
                ScenarioConfig {
                    uav_init: Vec2::new(-1.0, 0.0),
                    ..ScenarioConfig::default()
                },
                "uav_init",
            ),
            (
                ScenarioConfig {
                    dt: 0.0,
                    ..ScenarioConfig::default()
                },
                "dt",
            ),
            (
                ScenarioConfig {
                    sigma_range: f64::NAN,
                    ..ScenarioConfig::default()
                },
                "sigma_range",
            ),
        ];
        for (cfg, key) in cases {
            assert_eq!(cfg.validate().unwrap_err().key, key);
        }
    }

    #[test]
    fn equal_seeds_produce_bitwise_identical_noise() {
        let cfg = ScenarioConfig::default();
        let draw = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100)
                .map(|_| sample_transition_noise(&cfg, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    proptest! {
        #[test]
        fn zero_noise_trajectory_is_linear(
            x in -1e3..1e3f64,
            v in -50.0..50.0f64,
            steps in 1usize..200,
        ) {
            let dt = 0.1;
            let mut s = TargetState::new(x, v, -x, -v);
            for _ in 0..steps {
                s = step_target(&s, dt, [0.0; 4]);
            }
            let expected = x + steps as f64 * dt * v;
            prop_assert!((s.x - expected).abs() <= 1e-9 * expected.abs().max(1.0));
            prop_assert_eq!(s.vx, v);
        }
    }
}
