//! Deterministic, seedable simulator for real-time secure UAV trajectory
//! design in an integrated sensing and communication (ISAC) system.
//!
//! A UAV tracks a moving ground user (Bob) from noisy round-trip range
//! measurements with an extended Kalman filter, while a mobile eavesdropper
//! (Eve) follows a known path. Once per time slot the UAV picks its next
//! position by maximizing a weighted legitimate-vs-leakage rate objective
//! over the reachable set, using a concave surrogate refined by successive
//! convex approximation.
//!
//! Modules follow the pipeline order:
//!
//! - [`scenario`] — ground-truth kinematics, Eve's path, configuration
//! - [`sensing`] — distances and the noisy range measurement
//! - [`channel`] — free-space gains, achievable rates, secrecy rate
//! - [`ekf`] — range-only extended Kalman filter
//! - [`sca`] — per-slot trajectory subproblem and the outer loop
//! - [`runner`] — slot-by-slot orchestration and evaluation metrics

pub mod channel;
pub mod ekf;
pub mod runner;
pub mod sca;
pub mod scenario;
pub mod sensing;

pub use runner::{run_batch, run_scenario, RunSummary, SlotRecord};
pub use scenario::{ConfigError, ScenarioConfig, TargetState, Vec2};
