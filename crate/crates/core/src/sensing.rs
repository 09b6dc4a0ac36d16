//! Geometric distances and the noisy round-trip range measurement extracted
//! from the sensing echoes.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scenario::Vec2;

/// Signal propagation speed (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One range measurement tagged with the slot it was taken in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeMeasurement {
    pub slot: usize,
    /// Measured range (m). Noise may push it below the true distance; it is
    /// passed through unclamped so the filter innovation stays unbiased.
    pub value: f64,
}

/// Slant distance from the UAV at altitude `h` to a ground point.
pub fn true_distance(uav: Vec2, altitude: f64, ground: Vec2) -> f64 {
    (altitude * altitude + (uav - ground).norm_squared()).sqrt()
}

/// True distance plus zero-mean Gaussian noise of standard deviation `sigma`.
pub fn measure_range<R: Rng + ?Sized>(d_true: f64, sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    d_true + sigma * z
}

/// Range implied by a round-trip delay: c * tau / 2.
pub fn delay_to_range(delay: f64) -> f64 {
    SPEED_OF_LIGHT * delay / 2.0
}
