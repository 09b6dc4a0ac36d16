//! Per-slot trajectory subproblem and the outer successive-approximation loop.
//!
//! The weighted legitimate-vs-leakage objective is non-concave in the UAV
//! position. Each outer iteration replaces the legitimate-rate term by its
//! first-order lower bound around an expansion point and the squared
//! eavesdropper standoff by its linearization. The slack on the standoff is
//! eliminated analytically (the objective is strictly increasing in it),
//! leaving a smooth 2-D concave maximization over the reachable disk
//! intersected with the operating rectangle, solved by projected gradient
//! ascent with a backtracking line search.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel;
use crate::scenario::{ScenarioConfig, Vec2};

/// Armijo sufficient-increase fraction for the backtracking line search.
const ARMIJO_C: f64 = 1e-4;
/// Step shrink factor between line-search trials.
const BACKTRACK: f64 = 0.5;
/// Accepted steps shorter than this fraction of the disk radius end the solve.
const STEP_TOL_FRACTION: f64 = 1e-7;
/// Inner iteration cap; exceeding it is reported as a solver failure.
const MAX_INNER_ITERATIONS: usize = 500;
/// Line-search trial cap per iteration.
const MAX_BACKTRACKS: usize = 90;
/// The leakage term needs H^2 + s > 0; s is clamped at -H^2 (1 - margin) and
/// the line search refuses candidates at or below the clamp.
const GUARD_MARGIN: f64 = 1e-3;
/// Alternating-projection rounds cap.
const MAX_PROJECTION_ROUNDS: usize = 50;
/// Alternating projection exits once a round moves less than this (m).
const PROJECTION_EXIT: f64 = 1e-12;
/// Relative objective change below which an accepted step counts as a stall.
const STALL_REL: f64 = 1e-9;
/// A stalled step must also barely shrink to count as a crawl.
const STALL_CONTRACTION: f64 = 0.9;
/// Consecutive crawling steps before the solve is declared converged; this
/// only fires where corner-pinned iterates inch along at negligible gain.
const STALL_PATIENCE: usize = 5;

/// Physical and geometric parameters shared by every subproblem of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub altitude: f64,
    pub ref_gain: f64,
    pub tx_power: f64,
    pub bob_noise: f64,
    pub eve_noise: f64,
    pub bandwidth: f64,
    pub alpha: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub region_x: f64,
    pub region_y: f64,
}

impl Physics {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            altitude: cfg.altitude,
            ref_gain: cfg.ref_gain,
            tx_power: cfg.tx_power,
            bob_noise: cfg.bob_noise,
            eve_noise: cfg.eve_noise,
            bandwidth: cfg.bandwidth,
            alpha: cfg.alpha,
            max_speed: cfg.max_speed,
            dt: cfg.dt,
            region_x: cfg.region_x,
            region_y: cfg.region_y,
        }
    }

    /// Radius of the per-slot reachable disk (m).
    pub fn reach_radius(&self) -> f64 {
        self.max_speed * self.dt
    }
}

/// One per-slot subproblem: previous UAV position, current expansion point,
/// predicted Bob position, and Eve's known position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemInstance {
    pub uav_prev: Vec2,
    pub expansion: Vec2,
    pub bob_pred: Vec2,
    pub eve: Vec2,
    pub physics: Physics,
}

/// Maximizer of one convex subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemSolution {
    /// Optimal UAV position.
    pub position: Vec2,
    /// Standoff slack at the optimum; it binds against its linearization
    /// because the objective is strictly increasing in it (m^2).
    pub slack: f64,
    /// Surrogate objective value at the optimum (bit/s).
    pub objective: f64,
    /// Accepted ascent steps taken by the inner solver.
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    /// The inner solver hit its iteration cap; the best feasible iterate so
    /// far rides along so the caller can degrade gracefully.
    #[error("inner solver did not converge within {MAX_INNER_ITERATIONS} iterations")]
    NotConverged { best: SubproblemSolution },
}

/// Outer-loop parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaConfig {
    pub physics: Physics,
    /// Stop once the subproblem optimum changes by at most this much (bit/s).
    pub tolerance: f64,
    /// Outer iteration cap.
    pub max_iterations: usize,
}

impl ScaConfig {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            physics: Physics::from_config(cfg),
            tolerance: cfg.sca_tolerance,
            max_iterations: cfg.sca_max_iterations,
        }
    }
}

/// Result of one slot's outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOptimization {
    /// Final UAV position for the slot.
    pub position: Vec2,
    /// Weighted objective at the start point, then after each outer iteration.
    pub trace: Vec<f64>,
    /// Number of subproblems solved.
    pub iterations: usize,
    /// Set when any inner solve hit its iteration cap.
    pub degraded: bool,
}

/// Per-slot convergence trace row for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTrace {
    pub slot: usize,
    pub objectives: Vec<f64>,
}

fn bob_snr_scale(p: &Physics) -> f64 {
    p.tx_power * p.ref_gain / p.bob_noise
}

fn eve_snr_scale(p: &Physics) -> f64 {
    p.tx_power * p.ref_gain / p.eve_noise
}

fn slack_floor(p: &Physics) -> f64 {
    -p.altitude * p.altitude * (1.0 - GUARD_MARGIN)
}

/// First-order lower bound on Bob's rate around the instance expansion point.
///
/// Exact at the expansion point; everywhere else it sits at or below the true
/// rate because the rate is convex in the squared horizontal distance.
pub fn rb_lower_bound(q: Vec2, inst: &SubproblemInstance) -> f64 {
    let p = &inst.physics;
    let gamma = bob_snr_scale(p);
    let u_r = (inst.expansion - inst.bob_pred).norm_squared();
    let u = (q - inst.bob_pred).norm_squared();
    let rate_at_expansion = channel::achievable_rate(
        p.tx_power,
        channel::channel_gain(inst.expansion, p.altitude, inst.bob_pred, p.ref_gain),
        p.bob_noise,
        p.bandwidth,
    );
    let a = p.altitude * p.altitude + u_r;
    let slope = -(p.bandwidth / LN_2) * gamma / (a * (a + gamma));
    rate_at_expansion + slope * (u - u_r)
}

/// First-order lower bound on the squared horizontal distance to Eve.
pub fn linearized_standoff(q: Vec2, expansion: Vec2, eve: Vec2) -> f64 {
    let d = expansion - eve;
    d.norm_squared() + 2.0 * d.dot(q - expansion)
}

/// Leakage rate as a function of the squared-standoff slack, clamped away
/// from the pole of the path-loss expression.
fn leakage_at_slack(slack: f64, p: &Physics) -> f64 {
    let s = slack.max(slack_floor(p));
    channel::achievable_rate(
        p.tx_power,
        p.ref_gain / (p.altitude * p.altitude + s),
        p.eve_noise,
        p.bandwidth,
    )
}

/// The original weighted objective: alpha-weighted rate toward the predicted
/// Bob position minus the leakage toward Eve.
pub fn weighted_objective(q: Vec2, inst: &SubproblemInstance) -> f64 {
    let p = &inst.physics;
    let rate_bob = channel::achievable_rate(
        p.tx_power,
        channel::channel_gain(q, p.altitude, inst.bob_pred, p.ref_gain),
        p.bob_noise,
        p.bandwidth,
    );
    let rate_eve = channel::achievable_rate(
        p.tx_power,
        channel::channel_gain(q, p.altitude, inst.eve, p.ref_gain),
        p.eve_noise,
        p.bandwidth,
    );
    p.alpha * rate_bob - (1.0 - p.alpha) * rate_eve
}

/// Concave surrogate with the standoff slack eliminated at its binding value.
pub fn surrogate_objective(q: Vec2, inst: &SubproblemInstance) -> f64 {
    let s = linearized_standoff(q, inst.expansion, inst.eve);
    inst.physics.alpha * rb_lower_bound(q, inst)
        - (1.0 - inst.physics.alpha) * leakage_at_slack(s, &inst.physics)
}

/// Gradient of the surrogate. The standoff linearization has a constant
/// gradient, so the leakage term contributes a position-independent
/// direction away from Eve.
fn surrogate_gradient(q: Vec2, inst: &SubproblemInstance) -> Vec2 {
    let p = &inst.physics;
    let h2 = p.altitude * p.altitude;

    let gamma_b = bob_snr_scale(p);
    let a = h2 + (inst.expansion - inst.bob_pred).norm_squared();
    let slope_b = -(p.bandwidth / LN_2) * gamma_b / (a * (a + gamma_b));
    let grad_bob = (q - inst.bob_pred) * (2.0 * p.alpha * slope_b);

    let s = linearized_standoff(q, inst.expansion, inst.eve);
    let grad_eve = if s <= slack_floor(p) {
        Vec2::ZERO // flat inside the clamp
    } else {
        let gamma_e = eve_snr_scale(p);
        let c = h2 + s;
        let leak_slope = -(p.bandwidth / LN_2) * gamma_e / (c * (c + gamma_e));
        (inst.expansion - inst.eve) * (-2.0 * (1.0 - p.alpha) * leak_slope)
    };
    grad_bob + grad_eve
}

fn clamp_box(q: Vec2, region_x: f64, region_y: f64) -> Vec2 {
    Vec2::new(q.x.clamp(0.0, region_x), q.y.clamp(0.0, region_y))
}

fn project_disk(q: Vec2, center: Vec2, radius: f64) -> Vec2 {
    let d = q - center;
    let dist = d.norm();
    if dist <= radius {
        q
    } else {
        center + d * (radius / dist)
    }
}

/// Alternating projection onto reachable disk ∩ operating rectangle. The disk
/// center lies in the rectangle, so the box-then-disk round lands in the
/// intersection and the loop exits on the second pass.
fn project_feasible(q: Vec2, inst: &SubproblemInstance) -> Vec2 {
    let p = &inst.physics;
    let radius = p.reach_radius();
    let mut cur = q;
    for _ in 0..MAX_PROJECTION_ROUNDS {
        let boxed = clamp_box(cur, p.region_x, p.region_y);
        let disked = project_disk(boxed, inst.uav_prev, radius);
        let moved = (disked - cur).norm();
        cur = disked;
        if moved < PROJECTION_EXIT {
            break;
        }
    }
    cur
}

/// Maximizes the surrogate over the reachable set by projected gradient
/// ascent. The first trial displacement of every line search spans one disk
/// radius; backtracking halves it until the Armijo test passes.
pub fn solve_subproblem(inst: &SubproblemInstance) -> Result<SubproblemSolution, SolverError> {
    let p = &inst.physics;
    let radius = p.reach_radius();
    let guard = slack_floor(p);
    let step_tol = STEP_TOL_FRACTION * radius;

    let mut q = project_feasible(inst.expansion, inst);
    let mut value = surrogate_objective(q, inst);
    let mut iterations = 0usize;
    let mut warm_step: Option<f64> = None;
    let mut converged = radius == 0.0;
    let mut last_move = f64::INFINITY;
    let mut stalled = 0usize;

    while !converged && iterations < MAX_INNER_ITERATIONS {
        let grad = surrogate_gradient(q, inst);
        let gnorm = grad.norm();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let step_cap = radius / gnorm;
        let mut step = warm_step.map_or(step_cap, |w| (w * 4.0).min(step_cap));
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let cand = project_feasible(q + grad * step, inst);
            let moved = cand - q;
            let progress = grad.dot(moved);
            if progress > 0.0 && linearized_standoff(cand, inst.expansion, inst.eve) > guard {
                let cand_value = surrogate_objective(cand, inst);
                if cand_value >= value + ARMIJO_C * progress {
                    // the first Armijo-passing step can sit near twice the
                    // ideal one (the test is loose at c = 1e-4), which makes
                    // boundary iterates zigzag; probing the half step and
                    // keeping the better of the two restores fast contraction
                    let (mut best_q, mut best_value, mut best_step) = (cand, cand_value, step);
                    let half = project_feasible(q + grad * (step * BACKTRACK), inst);
                    if linearized_standoff(half, inst.expansion, inst.eve) > guard {
                        let half_value = surrogate_objective(half, inst);
                        if half_value > best_value {
                            (best_q, best_value, best_step) = (half, half_value, step * BACKTRACK);
                        }
                    }
                    let improvement = best_value - value;
                    let moved_norm = (best_q - q).norm();
                    q = best_q;
                    value = best_value;
                    warm_step = Some(best_step);
                    iterations += 1;
                    accepted = true;
                    // a step below resolution or one that no longer moves the
                    // objective in f64 means we are at the optimum
                    if moved_norm <= step_tol || improvement <= 0.0 {
                        converged = true;
                    }
                    if improvement <= STALL_REL * value.abs()
                        && moved_norm >= STALL_CONTRACTION * last_move
                    {
                        stalled += 1;
                        if stalled >= STALL_PATIENCE {
                            converged = true;
                        }
                    } else {
                        stalled = 0;
                    }
                    last_move = moved_norm;
                    break;
                }
            }
            step *= BACKTRACK;
            if step * gnorm < step_tol * 1e-3 {
                break; // trial displacement below solver resolution
            }
        }
        if !accepted {
            // no ascent step exists at resolution: stationary
            converged = true;
        }
    }

    let solution = SubproblemSolution {
        position: q,
        slack: linearized_standoff(q, inst.expansion, inst.eve),
        objective: value,
        inner_iterations: iterations,
    };
    if converged {
        Ok(solution)
    } else {
        Err(SolverError::NotConverged { best: solution })
    }
}

/// Outer loop: expand at the previous iterate, solve, repeat until the
/// subproblem optimum stalls within tolerance or the cap is reached.
///
/// The trace records the weighted objective at the start point and after each
/// outer iteration; it is non-decreasing because every surrogate touches the
/// objective at its expansion point and lower-bounds it elsewhere.
pub fn sca_iterate(uav_prev: Vec2, bob_pred: Vec2, eve: Vec2, cfg: &ScaConfig) -> SlotOptimization {
    let mut inst = SubproblemInstance {
        uav_prev,
        expansion: uav_prev,
        bob_pred,
        eve,
        physics: cfg.physics,
    };
    let mut previous = weighted_objective(uav_prev, &inst);
    let mut trace = vec![previous];
    let mut position = uav_prev;
    let mut degraded = false;

    for _ in 0..cfg.max_iterations {
        let sol = match solve_subproblem(&inst) {
            Ok(sol) => sol,
            Err(SolverError::NotConverged { best }) => {
                degraded = true;
                best
            }
        };
        position = sol.position;
        trace.push(weighted_objective(position, &inst));
        let finished = (sol.objective - previous).abs() <= cfg.tolerance;
        previous = sol.objective;
        inst.expansion = position;
        if finished {
            break;
        }
    }

    SlotOptimization {
        position,
        iterations: trace.len() - 1,
        trace,
        degraded,
    }
}
