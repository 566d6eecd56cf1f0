//! Artificial potential field guidance.
//!
//! Two laws share the same geometry and gating:
//!
//! * the conventional field, `F = μ_a b + Σ μ_r / d³ û`, which stalls wherever
//!   attraction and repulsion cancel;
//! * the Hamiltonian ("physics-informed") field, which adds the momentum-rate
//!   terms obtained from Hamilton's equations of the attractive and repulsive
//!   Hamiltonians, `F = μ_a (v̇ + b) + Σ (μ_r / d³ + μ_r |v̇_o| / |v_o|²) û`.
//!
//! Vector conventions: `b` points from the follower to the target and `v_rel`,
//! `v̇_rel` are its first and second time derivatives. For an obstacle, `b_o`
//! points from the obstacle to the follower (so `û = b_o / |b_o|` is the
//! repulsive direction) and `v_o`, `v̇_o` are its derivatives. The kinetic
//! repulsive term only acts while the follower is closing on the obstacle.

use crate::dynamics::Wrench;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApfError {
    #[error("collision with obstacle {index}: distance {distance} m <= hard radius {hard_radius} m")]
    Collision { index: usize, distance: f64, hard_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    Conventional,
    PhysicsInformed,
    None,
}

impl std::fmt::Display for GuidanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GuidanceMode::Conventional => "conventional",
            GuidanceMode::PhysicsInformed => "physics_informed",
            GuidanceMode::None => "none",
        })
    }
}

impl std::str::FromStr for GuidanceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conventional" => Ok(GuidanceMode::Conventional),
            "physics_informed" | "physics-informed" => Ok(GuidanceMode::PhysicsInformed),
            "none" => Ok(GuidanceMode::None),
            other => Err(format!("unknown guidance mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApfGains {
    /// Attractive gain on the relative position.
    pub mu_a: f64,
    /// Attractive gain on the relative acceleration; defaults to `mu_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_a_vel: Option<f64>,
    pub mu_r: f64,
    /// Floor on the obstacle-relative speed in the kinetic repulsive term.
    #[serde(default = "default_v_min")]
    pub v_min_mps: f64,
    /// Backward-difference window for the acceleration estimates.
    #[serde(default = "default_accel_window")]
    pub accel_window_s: f64,
}

fn default_v_min() -> f64 {
    1e-3
}

fn default_accel_window() -> f64 {
    0.5
}

impl ApfGains {
    pub fn new(mu_a: f64, mu_r: f64) -> Self {
        ApfGains {
            mu_a,
            mu_a_vel: None,
            mu_r,
            v_min_mps: default_v_min(),
            accel_window_s: default_accel_window(),
        }
    }

    pub fn mu_a_vel(&self) -> f64 {
        self.mu_a_vel.unwrap_or(self.mu_a)
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [self.mu_a, self.mu_a_vel(), self.mu_r, self.v_min_mps, self.accel_window_s];
        if all.iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err("apf gains, v_min_mps and accel_window_s must all be positive".into())
        }
    }
}

/// An obstacle as seen from the follower at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleRelative {
    /// Obstacle → follower.
    pub offset: Vector3<f64>,
    /// d/dt of `offset`.
    pub velocity: Vector3<f64>,
    /// d²/dt² of `offset`.
    pub acceleration: Vector3<f64>,
    pub hard_radius: f64,
    pub influence_radius: f64,
}

impl ObstacleRelative {
    pub fn at_rest(offset: Vector3<f64>, hard_radius: f64, influence_radius: f64) -> Self {
        ObstacleRelative {
            offset,
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
            hard_radius,
            influence_radius,
        }
    }
}

/// Relative kinematics of the target as seen from the follower.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetKinematics {
    /// Follower → target.
    pub b: Vector3<f64>,
    pub v_rel: Vector3<f64>,
    pub v_rel_dot: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GuidanceDiagnostics {
    pub h_a: f64,
    pub h_r: f64,
    pub p_a: Vector3<f64>,
    pub p_r: Vec<f64>,
    pub distances: Vec<f64>,
}

/// Weight on the repulsive field: 1 inside 90 % of the influence radius,
/// smoothstep to 0 over the outer 10 %.
pub fn influence_weight(distance: f64, influence_radius: f64) -> f64 {
    if distance >= influence_radius {
        return 0.0;
    }
    let band = 0.1 * influence_radius;
    let x = (influence_radius - distance) / band;
    if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

/// `U_a = ½ μ_a |b|²`
pub fn attractive_potential(b: &Vector3<f64>, gains: &ApfGains) -> f64 {
    0.5 * gains.mu_a * b.norm_squared()
}

/// `U_r = ½ μ_r / d²`
pub fn repulsive_potential(offset: &Vector3<f64>, gains: &ApfGains) -> f64 {
    0.5 * gains.mu_r / offset.norm_squared()
}

fn check_clearance(index: usize, o: &ObstacleRelative) -> Result<f64, ApfError> {
    let d = o.offset.norm();
    if d <= o.hard_radius {
        return Err(ApfError::Collision { index, distance: d, hard_radius: o.hard_radius });
    }
    Ok(d)
}

/// Static repulsion, shared by both laws so that they agree bit for bit when
/// the kinetic terms vanish.
fn static_repulsion(o: &ObstacleRelative, d: f64, gains: &ApfGains) -> Vector3<f64> {
    let w = influence_weight(d, o.influence_radius);
    if w == 0.0 {
        return Vector3::zeros();
    }
    let u = o.offset / d;
    u * (w * gains.mu_r / (d * d * d))
}

/// Conventional field.
pub fn conventional_apf_force(
    b: &Vector3<f64>,
    obstacles: &[ObstacleRelative],
    gains: &ApfGains,
) -> Result<Vector3<f64>, ApfError> {
    let mut f = b * gains.mu_a;
    for (i, o) in obstacles.iter().enumerate() {
        let d = check_clearance(i, o)?;
        f += static_repulsion(o, d, gains);
    }
    Ok(f)
}

/// `H_a = ½ μ_a |v|² + ½ μ_a |b|²` and `p_a = μ_a v`.
pub fn attractive_hamiltonian(
    b: &Vector3<f64>,
    v_rel: &Vector3<f64>,
    gains: &ApfGains,
) -> (f64, Vector3<f64>) {
    let h = 0.5 * gains.mu_a_vel() * v_rel.norm_squared() + 0.5 * gains.mu_a * b.norm_squared();
    (h, v_rel * gains.mu_a_vel())
}

/// `F_a = μ_a v̇ + μ_a b`, from `ṗ_a + ∂H_a/∂b = F_a`.
pub fn attractive_force(
    b: &Vector3<f64>,
    v_rel_dot: &Vector3<f64>,
    gains: &ApfGains,
) -> Vector3<f64> {
    v_rel_dot * gains.mu_a_vel() + b * gains.mu_a
}

/// Repulsive Hamiltonian `½ μ_r / |v_o|² + ½ μ_r / d²` and momentum factor
/// `μ_r / |v_o|`, with the speed floored at `v_min`.
pub fn repulsive_hamiltonian(o: &ObstacleRelative, gains: &ApfGains) -> (f64, f64) {
    let v = o.velocity.norm().max(gains.v_min_mps);
    let h = 0.5 * gains.mu_r / (v * v) + 0.5 * gains.mu_r / o.offset.norm_squared();
    (h, gains.mu_r / v)
}

/// Physics-informed repulsion from one obstacle.
pub fn repulsive_force(
    index: usize,
    o: &ObstacleRelative,
    gains: &ApfGains,
) -> Result<Vector3<f64>, ApfError> {
    let d = check_clearance(index, o)?;
    let static_part = static_repulsion(o, d, gains);
    let w = influence_weight(d, o.influence_radius);
    if w == 0.0 {
        return Ok(static_part);
    }
    let u = o.offset / d;
    let closing = -o.velocity.dot(&u);
    if closing <= 0.0 {
        return Ok(static_part);
    }
    let v = o.velocity.norm().max(gains.v_min_mps);
    let kinetic = u * (w * gains.mu_r * o.acceleration.norm() / (v * v));
    Ok(static_part + kinetic)
}

fn diagnostics(
    kin: &TargetKinematics,
    obstacles: &[ObstacleRelative],
    gains: &ApfGains,
) -> GuidanceDiagnostics {
    let (h_a, p_a) = attractive_hamiltonian(&kin.b, &kin.v_rel, gains);
    let mut d = GuidanceDiagnostics { h_a, p_a, ..Default::default() };
    for o in obstacles {
        let (h, p) = repulsive_hamiltonian(o, gains);
        d.h_r += h;
        d.p_r.push(p);
        d.distances.push(o.offset.norm());
    }
    d
}

/// Total physics-informed guidance wrench (force only).
pub fn pi_apf_total(
    kin: &TargetKinematics,
    obstacles: &[ObstacleRelative],
    gains: &ApfGains,
) -> Result<(Wrench, GuidanceDiagnostics), ApfError> {
    let mut f = attractive_force(&kin.b, &kin.v_rel_dot, gains);
    for (i, o) in obstacles.iter().enumerate() {
        f += repulsive_force(i, o, gains)?;
    }
    Ok((Wrench::from_force(f), diagnostics(kin, obstacles, gains)))
}

/// Guidance wrench for `mode`; `None` yields zero force but still checks
/// clearance.
pub fn guidance_wrench(
    mode: GuidanceMode,
    kin: &TargetKinematics,
    obstacles: &[ObstacleRelative],
    gains: &ApfGains,
) -> Result<(Wrench, GuidanceDiagnostics), ApfError> {
    match mode {
        GuidanceMode::PhysicsInformed => pi_apf_total(kin, obstacles, gains),
        GuidanceMode::Conventional => {
            let f = conventional_apf_force(&kin.b, obstacles, gains)?;
            Ok((Wrench::from_force(f), diagnostics(kin, obstacles, gains)))
        }
        GuidanceMode::None => {
            for (i, o) in obstacles.iter().enumerate() {
                check_clearance(i, o)?;
            }
            Ok((Wrench::zero(), diagnostics(kin, obstacles, gains)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub window_s: f64,
    pub min_samples: usize,
    pub speed_eps_mps: f64,
    pub force_eps_n: f64,
    pub goal_eps_m: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window_s: 20.0,
            min_samples: 10,
            speed_eps_mps: 1e-3,
            force_eps_n: 0.1,
            goal_eps_m: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSample {
    pub t: f64,
    pub speed: f64,
    pub distance_to_goal: f64,
    pub net_force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StallReport {
    pub t: f64,
    pub mean_speed: f64,
    pub max_net_force: f64,
    pub distance_to_goal: f64,
}

/// Sliding-window local-minimum detector.
#[derive(Debug, Clone)]
pub struct LocalMinimumDetector {
    cfg: DetectorConfig,
    window: VecDeque<DetectorSample>,
}

impl LocalMinimumDetector {
    pub fn new(cfg: DetectorConfig) -> Self {
        LocalMinimumDetector { cfg, window: VecDeque::new() }
    }

    pub fn push(&mut self, sample: DetectorSample) {
        self.window.push_back(sample);
        while let Some(front) = self.window.front() {
            if sample.t - front.t > self.cfg.window_s {
                self.window.pop_front();
            } else {
                break;
            }
        }
    }

    /// A trap is reported when the window spans `window_s`, the mean speed is
    /// below `speed_eps`, the goal is farther than `goal_eps` throughout and the
    /// net force stays below `force_eps`.
    pub fn check(&self) -> Option<StallReport> {
        let (first, last) = (self.window.front()?, self.window.back()?);
        if self.window.len() < self.cfg.min_samples
            || last.t - first.t < self.cfg.window_s * (1.0 - 1e-9)
        {
            return None;
        }
        let n = self.window.len() as f64;
        let mean_speed = self.window.iter().map(|s| s.speed).sum::<f64>() / n;
        let max_net_force = self.window.iter().map(|s| s.net_force).fold(0.0, f64::max);
        let far = self.window.iter().all(|s| s.distance_to_goal > self.cfg.goal_eps_m);
        (mean_speed < self.cfg.speed_eps_mps && far && max_net_force < self.cfg.force_eps_n).then_some(StallReport {
            t: last.t,
            mean_speed,
            max_net_force,
            distance_to_goal: last.distance_to_goal,
        })
    }
}
