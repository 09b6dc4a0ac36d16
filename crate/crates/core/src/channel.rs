//! Free-space channel gains, achievable/leakage rates, and the secrecy rate.

use serde::{Deserialize, Serialize};

use crate::scenario::Vec2;

/// Achievable rate at Bob and leakage rate at Eve for one slot (bit/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub rate_bob: f64,
    pub rate_eve: f64,
}

/// Signed secrecy rate and the nonnegative rate actually realized (bit/s).
///
/// Transmission is suspended when Eve out-receives Bob, so the realized rate
/// clamps at zero; the raw difference is what the optimizer works with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecrecyRate {
    pub raw: f64,
    pub realized: f64,
}

/// Decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear scale to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Inverse-second-power path-loss gain from the UAV to a ground node.
pub fn channel_gain(uav: Vec2, altitude: f64, ground: Vec2, ref_gain: f64) -> f64 {
    ref_gain / (altitude * altitude + (uav - ground).norm_squared())
}

/// Shannon rate B * log2(1 + p * h / noise) in bit/s.
pub fn achievable_rate(tx_power: f64, gain: f64, noise: f64, bandwidth: f64) -> f64 {
    bandwidth * (tx_power * gain / noise).ln_1p() / std::f64::consts::LN_2
}

/// Raw difference of the two rates and its nonnegative realized value.
pub fn secrecy_rate(rate_bob: f64, rate_eve: f64) -> SecrecyRate {
    let raw = rate_bob - rate_eve;
    SecrecyRate {
        raw,
        realized: raw.max(0.0),
    }
}
