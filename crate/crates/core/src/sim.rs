//! Closed-loop propagation of a target and a follower with guidance and
//! control in the loop.
//!
//! Per step: relative state, obstacle geometry, guidance wrench (held over the
//! step), then one RKMK4 step of both bodies with the control law evaluated at
//! every stage. Events are checked on the state at the start of each step.

use crate::apf::{
    guidance_wrench, ApfError, DetectorSample, GuidanceDiagnostics, GuidanceMode,
    LocalMinimumDetector, ObstacleRelative, StallReport, TargetKinematics,
};
use crate::disturbance::DisturbanceModel;
use crate::dynamics::{
    body_derivative, follower_from_relative, gravity_wrench, relative_pose, BodyParams,
    GeneralizedInertia, RelativeState, RigidBodyState, Wrench,
};
use crate::integrator::{rk4_step, rkmk4_step, IntegrationError};
use crate::lie::Pose;
use crate::orbit::lvlh_body_state;
use crate::scenario::{ObstacleMotion, Scenario, ScenarioError};
use crate::smc::{control_wrench, lyapunov_diagnostics, settling_time_bound, sliding_surface, ControlInputs};
use nalgebra::{Vector3, Vector6};
use serde::Serialize;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Captured,
    Collided,
    Stalled,
    Timeout,
    /// Chart exit or a non-finite state.
    Aborted,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Captured => 0,
            Outcome::Stalled => 2,
            Outcome::Collided => 3,
            Outcome::Timeout => 4,
            Outcome::Aborted => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Captured => "captured",
            Outcome::Collided => "collided",
            Outcome::Stalled => "stalled",
            Outcome::Timeout => "timeout",
            Outcome::Aborted => "aborted",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub target: Pose,
    pub follower: Pose,
    pub rho: Vector6<f64>,
    pub xi_rel: Vector6<f64>,
    pub s: Vector6<f64>,
    pub phi_c: Vector6<f64>,
    /// Guidance wrench in the follower frame.
    pub phi_apf: Vector6<f64>,
    pub distances: Vec<f64>,
    pub v1: f64,
    /// Follower position in the target frame.
    pub rel_position: Vector3<f64>,
    pub h_a: f64,
    pub h_r: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub obstacle_count: usize,
    pub rows: Vec<TrajectoryRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SteadyStateBounds {
    pub max_abs_b_m: f64,
    pub max_abs_gamma_rad: f64,
    pub max_abs_v_mps: f64,
    pub max_abs_omega_radps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub guidance_mode: GuidanceMode,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub steps: usize,
    pub final_time_s: f64,
    pub capture_time_s: Option<f64>,
    pub min_obstacle_distance_m: Option<f64>,
    /// First time with `‖s‖∞ < boundary_layer`.
    pub reaching_time_s: Option<f64>,
    pub tmax_s: Option<f64>,
    pub max_s_after_reaching: Option<f64>,
    /// Over the final 20 % of the run.
    pub steady_state: SteadyStateBounds,
    pub path_length_m: f64,
    pub final_distance_m: f64,
    pub terminal_speed_mps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stall: Option<StallReport>,
}

#[derive(Debug, Clone)]
enum ObstacleTrack {
    Linear { p0: Vector3<f64>, v: Vector3<f64> },
    /// Inertial position and velocity.
    TwoBody { state: Vector6<f64> },
}

#[derive(Debug, Clone)]
struct ObstacleRuntime {
    track: ObstacleTrack,
    hard_radius: f64,
    influence_radius: f64,
}

impl ObstacleRuntime {
    /// Position and rate of change in the target frame.
    fn target_frame(&self, t: f64, target: &RigidBodyState) -> (Vector3<f64>, Vector3<f64>) {
        match &self.track {
            ObstacleTrack::Linear { p0, v } => (p0 + v * t, *v),
            ObstacleTrack::TwoBody { state } => {
                let c = target.pose.rotation.matrix();
                let r = state.fixed_rows::<3>(0).into_owned();
                let v = state.fixed_rows::<3>(3).into_owned();
                let p = c.transpose() * (r - target.pose.position);
                let rate = c.transpose() * (v - target.inertial_velocity()) - target.xi.omega.cross(&p);
                (p, rate)
            }
        }
    }
}

fn point_mass_rate(x: &Vector6<f64>, mu: f64) -> Vector6<f64> {
    let r = x.fixed_rows::<3>(0);
    let a = r * (-mu / r.norm().powi(3));
    Vector6::new(x[3], x[4], x[5], a.x, a.y, a.z)
}

/// Velocity history for backward-difference accelerations.
#[derive(Debug, Default)]
struct RateHistory {
    samples: VecDeque<(f64, Vec<Vector3<f64>>)>,
}

impl RateHistory {
    fn push(&mut self, t: f64, rates: Vec<Vector3<f64>>, window: f64) {
        self.samples.push_back((t, rates));
        while self.samples.len() > 2 && t - self.samples[1].0 >= window - 1e-9 {
            self.samples.pop_front();
        }
    }

    /// `(x(t) − x(t − w)) / w` over the oldest retained sample; zero until a
    /// second sample exists.
    fn derivative(&self) -> Vec<Vector3<f64>> {
        let (t1, last) = self.samples.back().expect("history is never empty here");
        match self.samples.front() {
            Some((t0, first)) if t1 > t0 => last.iter().zip(first).map(|(a, b)| (a - b) / (t1 - t0)).collect(),
            _ => vec![Vector3::zeros(); last.len()],
        }
    }
}

struct Model<'a> {
    sc: &'a Scenario,
    target: BodyParams,
    follower: BodyParams,
    p_t: GeneralizedInertia,
    p_f: GeneralizedInertia,
    dist_t: DisturbanceModel,
    dist_f: DisturbanceModel,
}

impl Model<'_> {
    /// `ξ̇` of both bodies with the control law evaluated on the given states.
    fn rates(
        &self,
        t: f64,
        bodies: &[RigidBodyState],
        apf: &Wrench,
    ) -> Result<(Vector6<f64>, Vector6<f64>, Wrench), String> {
        let mu = self.sc.mu_earth_m3ps2;
        let (tgt, fol) = (&bodies[0], &bodies[1]);
        let g_t = gravity_wrench(tgt, &self.target, mu).map_err(|e| e.to_string())?;
        let g_f = gravity_wrench(fol, &self.follower, mu).map_err(|e| e.to_string())?;
        let d_t = self.dist_t.at(t);
        let d_f = self.dist_f.at(t);
        let xi_t_dot = body_derivative(tgt, &self.p_t, &[g_t, d_t]).xi_dot;
        let control = if self.sc.control_enabled {
            let rel = relative_pose(tgt, fol).map_err(|e| e.to_string())?;
            self.control(&rel, tgt, fol, &g_t, &g_f, &d_f, &xi_t_dot)?
        } else {
            Wrench::zero()
        };
        let xi_f_dot = body_derivative(fol, &self.p_f, &[g_f, d_f, control, *apf]).xi_dot;
        Ok((xi_t_dot, xi_f_dot, control))
    }

    #[allow(clippy::too_many_arguments)]
    fn control(
        &self,
        rel: &RelativeState,
        tgt: &RigidBodyState,
        fol: &RigidBodyState,
        g_t: &Wrench,
        g_f: &Wrench,
        d_f: &Wrench,
        xi_t_dot: &Vector6<f64>,
    ) -> Result<Wrench, String> {
        let (d_hat, xi_t_dot_hat) = if self.sc.smc.feed_disturbance {
            (*d_f, *xi_t_dot)
        } else {
            (Wrench::zero(), body_derivative(tgt, &self.p_t, &[*g_t]).xi_dot)
        };
        let inputs = ControlInputs {
            rel,
            follower_xi: &fol.xi,
            target_xi: &tgt.xi,
            target_xi_dot: &xi_t_dot_hat,
            gravity: g_f,
            disturbance: &d_hat,
            inertia: &self.p_f,
        };
        control_wrench(&inputs, &self.sc.smc).map_err(|e| e.to_string())
    }
}

/// Target and follower at t = 0.
pub fn initial_states(sc: &Scenario) -> Result<(RigidBodyState, RigidBodyState), ScenarioError> {
    let target = lvlh_body_state(&sc.orbit, sc.mu_earth_m3ps2).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let follower = follower_from_relative(&target, &sc.initial.rho(), &sc.initial.xi());
    Ok((target, follower))
}

fn obstacles(sc: &Scenario, target: &RigidBodyState) -> Vec<ObstacleRuntime> {
    sc.obstacles
        .iter()
        .map(|o| {
            let p0 = Vector3::from(o.position_m);
            let v0 = Vector3::from(o.velocity_mps);
            let track = match o.motion {
                ObstacleMotion::TargetFrameLinear => ObstacleTrack::Linear { p0, v: v0 },
                ObstacleMotion::TwoBody => {
                    let c = target.pose.rotation.matrix();
                    let r = target.pose.position + c * p0;
                    let v = target.inertial_velocity() + c * (target.xi.omega.cross(&p0) + v0);
                    ObstacleTrack::TwoBody { state: Vector6::new(r.x, r.y, r.z, v.x, v.y, v.z) }
                }
            };
            ObstacleRuntime { track, hard_radius: o.hard_radius_m, influence_radius: o.influence_radius_m }
        })
        .collect()
}

fn inf_norm(x: &Vector6<f64>) -> f64 {
    x.amax()
}

/// Run one scenario to its terminal event.
pub fn run(sc: &Scenario) -> Result<(TrajectoryRecord, RunSummary), ScenarioError> {
    sc.validate()?;
    let target_params = sc.target.params()?;
    let follower_params = sc.follower.params()?;
    let model = Model {
        sc,
        p_t: target_params.generalized_inertia(),
        p_f: follower_params.generalized_inertia(),
        target: target_params,
        follower: follower_params,
        dist_t: DisturbanceModel::new(&sc.disturbance.target, sc.seed),
        dist_f: DisturbanceModel::new(&sc.disturbance.follower, sc.seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
    };
    let (t0, f0) = initial_states(sc)?;
    let mut bodies = vec![t0, f0];
    let mut obs = obstacles(sc, &bodies[0]);
    let tmax = settling_time_bound(&sc.smc, &model.p_f).ok().map(|b| b.tmax);

    let n_steps = (sc.t_end_s / sc.dt_s).round() as usize;
    let window = sc.apf.accel_window_s;
    let mut history = RateHistory::default();
    let mut detector = LocalMinimumDetector::new(sc.events.stall);
    let mut record = TrajectoryRecord { obstacle_count: obs.len(), rows: Vec::with_capacity(n_steps + 1) };
    let mut capture_time = None;
    let mut stall = None;
    let mut diagnostic = None;
    let mut outcome = None;

    for k in 0..=n_steps {
        let t = k as f64 * sc.dt_s;
        let rel = match relative_pose(&bodies[0], &bodies[1]) {
            Ok(r) => r,
            Err(e) => {
                diagnostic = Some(format!("t = {t} s: {e}"));
                outcome = Some(Outcome::Aborted);
                break;
            }
        };
        let p_rel = rel.position();
        let v_rel = rel.position_rate();
        let geometry: Vec<_> = obs.iter().map(|o| o.target_frame(t, &bodies[0])).collect();
        let mut rates = vec![v_rel];
        rates.extend(geometry.iter().map(|g| g.1));
        history.push(t, rates, window);
        let accel = history.derivative();

        let kin = TargetKinematics { b: -p_rel, v_rel: -v_rel, v_rel_dot: -accel[0] };
        let relative: Vec<ObstacleRelative> = obs
            .iter()
            .zip(&geometry)
            .zip(&accel[1..])
            .map(|((o, (p, v)), a)| ObstacleRelative {
                offset: p_rel - p,
                velocity: v_rel - v,
                acceleration: accel[0] - a,
                hard_radius: o.hard_radius,
                influence_radius: o.influence_radius,
            })
            .collect();
        let (apf_target, diag) = match guidance_wrench(sc.guidance_mode, &kin, &relative, &sc.apf) {
            Ok(x) => x,
            Err(ApfError::Collision { index, distance, .. }) => {
                diagnostic = Some(format!("obstacle {index} at {distance} m"));
                let d = relative.iter().map(|o| o.offset.norm()).collect();
                let diag = GuidanceDiagnostics { distances: d, ..Default::default() };
                record.rows.push(row(sc, &model, t, &bodies, &rel, Wrench::zero(), Wrench::zero(), &diag));
                outcome = Some(Outcome::Collided);
                break;
            }
        };
        // into the follower frame: F_f = Rᵀ F_t
        let apf = Wrench::from_force(rel.h.rotation.matrix().transpose() * apf_target.force);

        let phi_c = match model.rates(t, &bodies, &apf) {
            Ok((_, _, c)) => c,
            Err(e) => {
                diagnostic = Some(format!("t = {t} s: {e}"));
                outcome = Some(Outcome::Aborted);
                break;
            }
        };
        record.rows.push(row(sc, &model, t, &bodies, &rel, phi_c, apf, &diag));

        let speed = rel.xi_rel.v.norm();
        if p_rel.norm() < sc.events.capture_eps_m && rel.xi_rel.to_vector().norm() < sc.events.vel_eps_mps {
            capture_time.get_or_insert(t);
            if sc.terminate_on_capture {
                outcome = Some(Outcome::Captured);
                break;
            }
        }
        detector.push(DetectorSample {
            t,
            speed,
            distance_to_goal: p_rel.norm(),
            net_force: model.follower.mass * accel[0].norm(),
        });
        if capture_time.is_none() {
            if let Some(report) = detector.check() {
                stall = Some(report);
                outcome = Some(Outcome::Stalled);
                break;
            }
        }
        if k == n_steps {
            break;
        }

        let step = rkmk4_step(
            |ts, b| {
                model
                    .rates(ts, b, &apf)
                    .map(|(a, c, _)| vec![a, c])
                    .map_err(|reason| IntegrationError::Derivative { t: ts, reason })
            },
            t,
            &bodies,
            sc.dt_s,
        );
        bodies = match step {
            Ok(b) if b.iter().all(|s| s.xi.is_finite() && s.pose.position.iter().all(|x| x.is_finite())) => b,
            Ok(_) => {
                diagnostic = Some(format!("non-finite state after t = {t} s"));
                outcome = Some(Outcome::Aborted);
                break;
            }
            Err(e) => {
                diagnostic = Some(e.to_string());
                outcome = Some(Outcome::Aborted);
                break;
            }
        };
        for o in obs.iter_mut() {
            if let ObstacleTrack::TwoBody { state } = &mut o.track {
                let mu = sc.mu_earth_m3ps2;
                *state = rk4_step(|_, x| point_mass_rate(x, mu), t, state, sc.dt_s)
                    .expect("obstacle orbit stays finite");
            }
        }
    }

    let outcome = outcome.unwrap_or(if capture_time.is_some() { Outcome::Captured } else { Outcome::Timeout });
    let summary = summarize(sc, &record, outcome, capture_time, tmax, diagnostic, stall);
    Ok((record, summary))
}

#[allow(clippy::too_many_arguments)]
fn row(
    sc: &Scenario,
    model: &Model<'_>,
    t: f64,
    bodies: &[RigidBodyState],
    rel: &RelativeState,
    phi_c: Wrench,
    apf: Wrench,
    diag: &GuidanceDiagnostics,
) -> TrajectoryRow {
    let s = sliding_surface(&rel.rho, &rel.xi_rel, &sc.smc);
    let (v1, _) = lyapunov_diagnostics(&s, &model.p_f, &sc.smc);
    TrajectoryRow {
        t,
        target: bodies[0].pose,
        follower: bodies[1].pose,
        rho: rel.rho.to_vector(),
        xi_rel: rel.xi_rel.to_vector(),
        s,
        phi_c: phi_c.to_vector(),
        phi_apf: apf.to_vector(),
        distances: diag.distances.clone(),
        v1,
        rel_position: rel.position(),
        h_a: diag.h_a,
        h_r: diag.h_r,
    }
}

fn summarize(
    sc: &Scenario,
    record: &TrajectoryRecord,
    outcome: Outcome,
    capture_time: Option<f64>,
    tmax: Option<f64>,
    diagnostic: Option<String>,
    stall: Option<StallReport>,
) -> RunSummary {
    let rows = &record.rows;
    let bl = sc.smc.boundary_layer;
    let reach = rows.iter().position(|r| inf_norm(&r.s) < bl);
    let min_dist = rows.iter().flat_map(|r| r.distances.iter().copied()).fold(None, |m: Option<f64>, d| {
        Some(m.map_or(d, |m| m.min(d)))
    });
    let last_t = rows.last().map_or(0.0, |r| r.t);
    let mut ss = SteadyStateBounds::default();
    for r in rows.iter().filter(|r| r.t >= 0.8 * last_t) {
        for i in 0..3 {
            ss.max_abs_gamma_rad = ss.max_abs_gamma_rad.max(r.rho[i].abs());
            ss.max_abs_b_m = ss.max_abs_b_m.max(r.rho[i + 3].abs());
            ss.max_abs_omega_radps = ss.max_abs_omega_radps.max(r.xi_rel[i].abs());
            ss.max_abs_v_mps = ss.max_abs_v_mps.max(r.xi_rel[i + 3].abs());
        }
    }
    let path_length = rows.windows(2).map(|w| (w[1].rel_position - w[0].rel_position).norm()).sum();
    RunSummary {
        scenario: sc.name.clone(),
        guidance_mode: sc.guidance_mode,
        outcome,
        diagnostic,
        steps: rows.len().saturating_sub(1),
        final_time_s: last_t,
        capture_time_s: capture_time,
        min_obstacle_distance_m: min_dist,
        reaching_time_s: reach.map(|i| rows[i].t),
        tmax_s: tmax,
        max_s_after_reaching: reach.map(|i| rows[i..].iter().map(|r| inf_norm(&r.s)).fold(0.0, f64::max)),
        steady_state: ss,
        path_length_m: path_length,
        final_distance_m: rows.last().map_or(0.0, |r| r.rel_position.norm()),
        terminal_speed_mps: rows.last().map_or(0.0, |r| Vector3::new(r.xi_rel[3], r.xi_rel[4], r.xi_rel[5]).norm()),
        stall,
    }
}
