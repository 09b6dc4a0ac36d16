//! Range-only extended Kalman filter over the constant-velocity model:
//! predict, linearize, gain, update, and the periodic feedback reset.
//!
//! The innovation is scalar (one range per slot), so the gain computation is
//! a scalar division rather than a matrix inversion.

use nalgebra::{Matrix4, RowVector4, Vector4};
use thiserror::Error;

use crate::scenario::{TargetState, Vec2};
use crate::sensing;

/// 4x4 mean-squared-error matrix over `[x, vx, y, vy]`.
pub type Covariance4 = Matrix4<f64>;

/// Positional standard deviation assumed for an uplink location feedback (m).
pub const FEEDBACK_POS_STD: f64 = 0.1;
/// Velocity variance assumed after a feedback reset ((m/s)^2); a single
/// location report carries no velocity information.
pub const FEEDBACK_VEL_VAR: f64 = 4.0;

/// Filter estimate and its error covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub estimate: TargetState,
    pub cov: Covariance4,
}

/// Diagonal transition noise covariance diag(sx^2, svx^2, sy^2, svy^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise(Matrix4<f64>);

impl ProcessNoise {
    pub fn from_std_devs(sigma_x: f64, sigma_vx: f64, sigma_y: f64, sigma_vy: f64) -> Self {
        Self(Matrix4::from_diagonal(&Vector4::new(
            sigma_x * sigma_x,
            sigma_vx * sigma_vx,
            sigma_y * sigma_y,
            sigma_vy * sigma_vy,
        )))
    }

    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EkfError {
    /// The scalar innovation variance H P H' + sigma_d^2 was not positive.
    /// Only reachable with exact sensing and a fully collapsed covariance.
    #[error("innovation variance {variance} is not positive")]
    DegenerateInnovation { variance: f64 },
}

fn state_vector(s: &TargetState) -> Vector4<f64> {
    Vector4::new(s.x, s.vx, s.y, s.vy)
}

fn vector_state(v: &Vector4<f64>) -> TargetState {
    TargetState::new(v[0], v[1], v[2], v[3])
}

/// Constant-velocity transition matrix with `dt` coupling position to velocity.
pub fn transition_matrix(dt: f64) -> Matrix4<f64> {
    Matrix4::new(
        1.0, dt, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, dt, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// State and MSE-matrix prediction: x' = Phi x, P' = Phi P Phi' + Q.
pub fn predict(fs: &FilterState, phi: &Matrix4<f64>, q: &ProcessNoise) -> FilterState {
    let est = phi * state_vector(&fs.estimate);
    let cov = phi * fs.cov * phi.transpose() + q.matrix();
    FilterState {
        estimate: vector_state(&est),
        cov,
    }
}

/// Jacobian row of the range observation at the predicted state.
///
/// Degenerates to the zero row when the UAV is directly overhead: a range
/// measurement carries no directional information there.
pub fn range_jacobian(estimate: &TargetState, uav: Vec2, altitude: f64) -> RowVector4<f64> {
    let d = sensing::true_distance(uav, altitude, estimate.position());
    RowVector4::new((estimate.x - uav.x) / d, 0.0, (estimate.y - uav.y) / d, 0.0)
}

/// Kalman gain K = P H' / (H P H' + range_var) for the scalar innovation.
pub fn kalman_gain(
    cov_pred: &Covariance4,
    obs_row: &RowVector4<f64>,
    range_var: f64,
) -> Result<Vector4<f64>, EkfError> {
    let cross = cov_pred * obs_row.transpose();
    let variance = (obs_row * cross)[(0, 0)] + range_var;
    if variance <= 0.0 {
        return Err(EkfError::DegenerateInnovation { variance });
    }
    Ok(cross / variance)
}

/// State and MSE-matrix update from the measured range.
///
/// `predicted_range` is the observation function evaluated at the predicted
/// state. The covariance is symmetrized by averaging with its transpose.
pub fn update(
    pred: &FilterState,
    gain: &Vector4<f64>,
    obs_row: &RowVector4<f64>,
    measured: f64,
    predicted_range: f64,
) -> FilterState {
    let innovation = measured - predicted_range;
    let est = state_vector(&pred.estimate) + gain * innovation;
    let cov = (Matrix4::identity() - gain * obs_row) * pred.cov;
    let cov = (cov + cov.transpose()) * 0.5;
    FilterState {
        estimate: vector_state(&est),
        cov,
    }
}

/// Covariance assumed right after a location feedback: tight position blocks,
/// loose velocity blocks, no cross terms.
pub fn feedback_covariance() -> Covariance4 {
    Matrix4::from_diagonal(&Vector4::new(
        FEEDBACK_POS_STD * FEEDBACK_POS_STD,
        FEEDBACK_VEL_VAR,
        FEEDBACK_POS_STD * FEEDBACK_POS_STD,
        FEEDBACK_VEL_VAR,
    ))
}

/// Re-initializes the filter from an uplink location feedback: position set to
/// the fed-back location, velocity kept from the running estimate.
pub fn feedback_reset(fs: &FilterState, position: Vec2) -> FilterState {
    FilterState {
        estimate: TargetState::new(position.x, fs.estimate.vx, position.y, fs.estimate.vy),
        cov: feedback_covariance(),
    }
}

/// Filter state at the very first feedback, before any motion information.
pub fn initial_state(position: Vec2, velocity_prior: Vec2) -> FilterState {
    FilterState {
        estimate: TargetState::new(position.x, velocity_prior.x, position.y, velocity_prior.y),
        cov: feedback_covariance(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transition_matrix_zero_dt_is_identity() {
        assert_eq!(transition_matrix(0.0), Matrix4::identity());
    }

    #[test]
    fn transition_matches_step_target() {
        let phi = transition_matrix(0.1);
        let x = Vector4::new(350.0, 10.0, 470.0, 10.0);
        assert_eq!(phi * x, Vector4::new(351.0, 10.0, 471.0, 10.0));
    }

    #[test]
    fn transition_semigroup() {
        let phi = transition_matrix(0.1);
        assert_eq!(phi * phi, transition_matrix(0.2));
    }

    #[test]
    fn predict_zero_cov_zero_q() {
        let fs = FilterState {
            estimate: TargetState::new(1.0, 2.0, 3.0, 4.0),
            cov: Matrix4::zeros(),
        };
        let out = predict(&fs, &transition_matrix(0.1), &ProcessNoise::zero());
        assert_eq!(out.cov, Matrix4::zeros());
    }

    #[test]
    fn predict_identity_phi_keeps_cov() {
        let fs = FilterState {
            estimate: TargetState::new(0.0, 0.0, 0.0, 0.0),
            cov: Matrix4::identity(),
        };
        let out = predict(&fs, &transition_matrix(0.0), &ProcessNoise::zero());
        assert_eq!(out.cov, Matrix4::identity());
    }

    #[test]
    fn predict_cov_entry_from_symbolic_evaluation() {
        let fs = FilterState {
            estimate: TargetState::new(0.0, 0.0, 0.0, 0.0),
            cov: Matrix4::identity(),
        };
        let q = ProcessNoise::from_std_devs(1.0, 0.5, 1.0, 0.5);
        let out = predict(&fs, &transition_matrix(0.1), &q);
        // (Phi I Phi')(0,0) = 1 + dt^2 = 1.01, plus Q(0,0) = 1
        assert_relative_eq!(out.cov[(0, 0)], 2.01, max_relative = 1e-12);
    }

    #[test]
    fn jacobian_overhead_singularity() {
        let est = TargetState::new(100.0, 5.0, 200.0, -5.0);
        let row = range_jacobian(&est, Vec2::new(100.0, 200.0), 50.0);
        assert_eq!(row, RowVector4::zeros());
    }

    #[test]
    fn jacobian_345_geometry() {
        let est = TargetState::new(30.0, 0.0, 0.0, 0.0);
        let row = range_jacobian(&est, Vec2::ZERO, 40.0);
        assert_relative_eq!(row[0], 0.6, max_relative = 1e-12);
        assert_eq!((row[1], row[2], row[3]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn jacobian_direct_evaluation() {
        let est = TargetState::new(30.0, 0.0, 40.0, 0.0);
        let row = range_jacobian(&est, Vec2::ZERO, 50.0);
        assert_relative_eq!(row[0], 0.4242640687119285, max_relative = 1e-12);
        assert_relative_eq!(row[2], 0.565685424949238, max_relative = 1e-12);
    }

    #[test]
    fn gain_zero_row_is_zero() {
        let k = kalman_gain(&Matrix4::identity(), &RowVector4::zeros(), 4.0).unwrap();
        assert_eq!(k, Vector4::zeros());
    }

    #[test]
    fn gain_scalar_arithmetic() {
        let row = RowVector4::new(0.6, 0.0, 0.0, 0.0);
        let k = kalman_gain(&Matrix4::identity(), &row, 4.0).unwrap();
        assert_relative_eq!(k[0], 0.13761467889908255, max_relative = 1e-12);
        assert_eq!((k[1], k[2], k[3]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gain_vanishes_for_huge_measurement_noise() {
        let row = RowVector4::new(0.6, 0.0, 0.8, 0.0);
        let k = kalman_gain(&Matrix4::identity(), &row, 1e12).unwrap();
        assert!(k.norm() < 1e-11);
    }

    #[test]
    fn gain_degenerate_variance_is_error() {
        let err =
            kalman_gain(&Matrix4::zeros(), &RowVector4::new(0.6, 0.0, 0.0, 0.0), 0.0).unwrap_err();
        assert!(matches!(err, EkfError::DegenerateInnovation { .. }));
    }

    #[test]
    fn update_zero_gain_is_identity_on_state() {
        let pred = FilterState {
            estimate: TargetState::new(1.0, 2.0, 3.0, 4.0),
            cov: Matrix4::identity(),
        };
        let out = update(
            &pred,
            &Vector4::zeros(),
            &RowVector4::new(0.5, 0.0, 0.5, 0.0),
            10.0,
            7.0,
        );
        assert_eq!(out.estimate, pred.estimate);
        assert_eq!(out.cov, pred.cov);
    }

    #[test]
    fn update_zero_innovation_still_shrinks_cov() {
        let pred = FilterState {
            estimate: TargetState::new(30.0, 0.0, 0.0, 0.0),
            cov: Matrix4::identity(),
        };
        let row = RowVector4::new(0.6, 0.0, 0.0, 0.0);
        let k = kalman_gain(&pred.cov, &row, 4.0).unwrap();
        let out = update(&pred, &k, &row, 50.0, 50.0);
        assert_eq!(out.estimate, pred.estimate);
        assert!(out.cov[(0, 0)] < 1.0);
    }

    #[test]
    fn update_moves_state_along_gain() {
        let pred = FilterState {
            estimate: TargetState::new(0.0, 0.0, 0.0, 0.0),
            cov: Matrix4::identity(),
        };
        let row = RowVector4::new(0.6, 0.0, 0.0, 0.0);
        let k = kalman_gain(&pred.cov, &row, 4.0).unwrap();
        let out = update(&pred, &k, &row, 12.0, 10.0); // innovation = 2 m
        assert_relative_eq!(out.estimate.x, 0.2752293577981651, max_relative = 1e-12);
        assert_eq!(out.estimate.vx, 0.0);
        assert_eq!(out.estimate.y, 0.0);
    }

    #[test]
    fn feedback_reset_keeps_velocity() {
        let fs = FilterState {
            estimate: TargetState::new(0.0, 9.5, 0.0, 10.5),
            cov: Matrix4::identity() * 100.0,
        };
        let out = feedback_reset(&fs, Vec2::new(351.0, 471.0));
        assert_eq!(out.estimate, TargetState::new(351.0, 9.5, 471.0, 10.5));
        assert_eq!(out.cov, feedback_covariance());
    }

    #[test]
    fn gain_parallel_to_cross_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let cov = a * a.transpose() + Matrix4::identity() * 1e-6;
            let row = RowVector4::new(
                rng.random_range(-1.0..1.0),
                0.0,
                rng.random_range(-1.0..1.0),
                0.0,
            );
            let k = kalman_gain(&cov, &row, 4.0).unwrap();
            let cross = cov * row.transpose();
            // 4-D cross products of parallel vectors vanish pairwise
            for i in 0..4 {
                for j in (i + 1)..4 {
                    assert!((k[i] * cross[j] - k[j] * cross[i]).abs() < 1e-12 * cross.norm());
                }
            }
        }
    }

    #[test]
    fn covariance_stays_symmetric_psd_over_random_cycles() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let phi = transition_matrix(0.1);
        let q = ProcessNoise::from_std_devs(1.0, 0.5, 1.0, 0.5);
        let mut fs = initial_state(Vec2::new(350.0, 470.0), Vec2::ZERO);
        for _ in 0..1000 {
            fs = predict(&fs, &phi, &q);
            let uav = Vec2::new(rng.random_range(0.0..700.0), rng.random_range(0.0..700.0));
            let row = range_jacobian(&fs.estimate, uav, 50.0);
            let measured = rng.random_range(40.0..600.0);
            let predicted = sensing::true_distance(uav, 50.0, fs.estimate.position());
            let k = kalman_gain(&fs.cov, &row, 4.0).unwrap();
            fs = update(&fs, &k, &row, measured, predicted);

            let asym = (fs.cov - fs.cov.transpose()).norm();
            assert!(asym <= 1e-9 * fs.cov.norm().max(1.0), "asymmetry {asym}");
            let trace = fs.cov.trace();
            let min_eig = fs.cov.symmetric_eigenvalues().min();
            assert!(min_eig >= -1e-9 * trace, "eig {min_eig} trace {trace}");
        }
    }

    #[test]
    fn positional_trace_never_grows_on_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let phi = transition_matrix(0.1);
        let q = ProcessNoise::from_std_devs(1.0, 0.5, 1.0, 0.5);
        let mut fs = initial_state(Vec2::new(100.0, 100.0), Vec2::ZERO);
        for _ in 0..200 {
            let pred = predict(&fs, &phi, &q);
            let uav = Vec2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
            let row = range_jacobian(&pred.estimate, uav, 50.0);
            let k = kalman_gain(&pred.cov, &row, 4.0).unwrap();
            let predicted = sensing::true_distance(uav, 50.0, pred.estimate.position());
            fs = update(
                &pred,
                &k,
                &row,
                predicted + rng.random_range(-4.0..4.0),
                predicted,
            );
            if row != RowVector4::zeros() {
                let before = pred.cov[(0, 0)] + pred.cov[(2, 2)];
                let after = fs.cov[(0, 0)] + fs.cov[(2, 2)];
                assert!(after <= before + 1e-12 * before);
            }
        }
    }

    #[test]
    fn zero_noise_prediction_tracks_truth_exactly() {
        // exact initialization, Q = 0, sigma_d = 0: prediction equals truth
        let phi = transition_matrix(0.1);
        let q = ProcessNoise::zero();
        let mut truth = TargetState::new(350.0, 10.0, 470.0, 10.0);
        let mut fs = FilterState {
            estimate: truth,
            cov: feedback_covariance(),
        };
        let uav = Vec2::new(300.0, 400.0);
        for _ in 0..10 {
            truth = crate::scenario::step_target(&truth, 0.1, [0.0; 4]);
            let pred = predict(&fs, &phi, &q);
            let err = (pred.estimate.position() - truth.position()).norm();
            assert!(err < 1e-6, "prediction error {err}");
            let row = range_jacobian(&pred.estimate, uav, 50.0);
            let measured = sensing::true_distance(uav, 50.0, truth.position());
            let predicted = sensing::true_distance(uav, 50.0, pred.estimate.position());
            fs = match kalman_gain(&pred.cov, &row, 0.0) {
                Ok(k) => update(&pred, &k, &row, measured, predicted),
                Err(_) => pred,
            };
        }
    }
}
