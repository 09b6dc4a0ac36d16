//! Test-side oracles and instance generators, kept independent of the
//! library's solver path: the objective here is evaluated from the raw
//! closed-form expressions, and the optimum is located by brute-force grid
//! search with refinement.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use isac_core::sca::{Physics, SubproblemInstance};
use isac_core::scenario::{ScenarioConfig, Vec2};

pub fn default_physics(alpha: f64) -> Physics {
    Physics::from_config(&ScenarioConfig {
        alpha,
        ..ScenarioConfig::default()
    })
}

/// Random instance with the default physics: expansion inside the reachable disk,
/// Bob and Eve within a few hundred meters (sometimes very close).
pub fn random_instance(rng: &mut ChaCha8Rng, alpha: f64) -> SubproblemInstance {
    let uav_prev = Vec2::new(
        rng.random_range(100.0..900.0),
        rng.random_range(100.0..900.0),
    );
    let physics = default_physics(alpha);
    let radius = physics.reach_radius();
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let rho = radius * rng.random_range(0.0..1.0f64).sqrt();
    let expansion = uav_prev + Vec2::new(angle.cos(), angle.sin()) * rho;
    let spread = if rng.random_range(0.0..1.0) < 0.2 {
        10.0
    } else {
        300.0
    };
    let bob_pred = Vec2::new(
        (uav_prev.x + rng.random_range(-spread..spread)).clamp(0.0, 1000.0),
        (uav_prev.y + rng.random_range(-spread..spread)).clamp(0.0, 1000.0),
    );
    let eve = Vec2::new(
        (uav_prev.x + rng.random_range(-spread..spread)).clamp(0.0, 1000.0),
        (uav_prev.y + rng.random_range(-spread..spread)).clamp(0.0, 1000.0),
    );
    SubproblemInstance {
        uav_prev,
        expansion,
        bob_pred,
        eve,
        physics,
    }
}

fn sq_dist(a: Vec2, b: Vec2) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Surrogate objective evaluated from the raw first-order-bound expressions,
/// with the slack at its binding value.
pub fn oracle_objective(q: Vec2, inst: &SubproblemInstance) -> f64 {
    let p = &inst.physics;
    let h2 = p.altitude * p.altitude;
    let gb = p.tx_power * p.ref_gain / p.bob_noise;
    let ge = p.tx_power * p.ref_gain / p.eve_noise;
    let ln2 = std::f64::consts::LN_2;

    let u_r = sq_dist(inst.expansion, inst.bob_pred);
    let u = sq_dist(q, inst.bob_pred);
    let snr_r = gb / (h2 + u_r);
    let rb_hat = p.bandwidth
        * ((1.0 + snr_r).log2()
            + (1.0 / ln2) * (1.0 / (1.0 + snr_r)) * (-gb) * (u - u_r) / ((h2 + u_r) * (h2 + u_r)));

    let d = inst.expansion - inst.eve;
    let s = sq_dist(inst.expansion, inst.eve) + 2.0 * d.dot(q - inst.expansion);
    let s = s.max(-h2 * (1.0 - 1e-3));
    let leak = p.bandwidth * (1.0 + ge / (h2 + s)).log2();

    p.alpha * rb_hat - (1.0 - p.alpha) * leak
}

fn oracle_project(q: Vec2, inst: &SubproblemInstance) -> Vec2 {
    let p = &inst.physics;
    let radius = p.reach_radius();
    let boxed = Vec2::new(q.x.clamp(0.0, p.region_x), q.y.clamp(0.0, p.region_y));
    let d = boxed - inst.uav_prev;
    let dist = d.norm();
    if dist <= radius {
        boxed
    } else {
        inst.uav_prev + d * (radius / dist)
    }
}

/// Brute-force maximum of the surrogate over the reachable set: a 201x201
/// grid over the disk's bounding square (every point projected feasible),
/// then two refinement passes shrunk around the running best.
pub fn grid_oracle(inst: &SubproblemInstance) -> f64 {
    let radius = inst.physics.reach_radius();
    let mut center = inst.uav_prev;
    let mut span = radius;
    let mut best_value = f64::NEG_INFINITY;
    let mut best_point = center;
    for _pass in 0..3 {
        for i in 0..=200 {
            for j in 0..=200 {
                let raw = Vec2::new(
                    center.x + span * (i as f64 / 100.0 - 1.0),
                    center.y + span * (j as f64 / 100.0 - 1.0),
                );
                let q = oracle_project(raw, inst);
                let value = oracle_objective(q, inst);
                if value > best_value {
                    best_value = value;
                    best_point = q;
                }
            }
        }
        center = best_point;
        span /= 50.0;
    }
    best_value
}
