//! Scenario description and its TOML file format. Every physical quantity
//! carries its unit in the key name.

use crate::apf::{ApfGains, DetectorConfig, GuidanceMode};
use crate::disturbance::DisturbanceConfig;
use crate::dynamics::BodyParams;
use crate::lie::{ExpCoords, UnifiedVelocity};
use crate::orbit::{OrbitalElements, EARTH_MU};
use crate::smc::SmcGains;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: {message}")]
    Syntax { origin: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleMotion {
    /// Constant velocity in the target body frame.
    #[default]
    TargetFrameLinear,
    /// Point mass under central gravity, started from the given relative state.
    TwoBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    /// Position in the target body frame at t = 0.
    pub position_m: [f64; 3],
    #[serde(default)]
    pub velocity_mps: [f64; 3],
    pub hard_radius_m: f64,
    pub influence_radius_m: f64,
    #[serde(default)]
    pub motion: ObstacleMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub mass_kg: f64,
    pub inertia_kgm2: [[f64; 3]; 3],
}

impl BodySpec {
    pub fn params(&self) -> Result<BodyParams, ScenarioError> {
        let j = Matrix3::from_fn(|r, c| self.inertia_kgm2[r][c]);
        BodyParams::new(self.mass_kg, j).map_err(|e| ScenarioError::Invalid(e.to_string()))
    }
}

/// Follower relative to the target: `ρ = [γ; b]`, `ξ̃ = [Ω; v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialRelative {
    #[serde(default)]
    pub gamma_rad: [f64; 3],
    pub b_m: [f64; 3],
    #[serde(default)]
    pub omega_radps: [f64; 3],
    #[serde(default)]
    pub v_mps: [f64; 3],
}

impl InitialRelative {
    pub fn rho(&self) -> ExpCoords {
        ExpCoords::new(Vector3::from(self.gamma_rad), Vector3::from(self.b_m))
    }

    pub fn xi(&self) -> UnifiedVelocity {
        UnifiedVelocity::new(Vector3::from(self.omega_radps), Vector3::from(self.v_mps))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    #[serde(default = "default_capture_eps")]
    pub capture_eps_m: f64,
    #[serde(default = "default_vel_eps")]
    pub vel_eps_mps: f64,
    #[serde(default)]
    pub stall: DetectorConfig,
}

fn default_capture_eps() -> f64 {
    0.05
}

fn default_vel_eps() -> f64 {
    0.01
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            capture_eps_m: default_capture_eps(),
            vel_eps_mps: default_vel_eps(),
            stall: DetectorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    #[serde(default)]
    pub target: DisturbanceConfig,
    #[serde(default)]
    pub follower: DisturbanceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub guidance_mode: GuidanceMode,
    #[serde(default = "default_mu")]
    pub mu_earth_m3ps2: f64,
    pub dt_s: f64,
    pub t_end_s: f64,
    #[serde(default)]
    pub seed: u64,
    /// Stop at the first capture; otherwise keep station until `t_end_s`.
    #[serde(default = "default_true")]
    pub terminate_on_capture: bool,
    #[serde(default = "default_true")]
    pub control_enabled: bool,
    pub orbit: OrbitalElements,
    pub target: BodySpec,
    pub follower: BodySpec,
    pub initial: InitialRelative,
    pub apf: ApfGains,
    pub smc: SmcGains,
    #[serde(default)]
    pub events: EventConfig,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_mu() -> f64 {
    EARTH_MU
}

fn default_true() -> bool {
    true
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

impl Scenario {
    /// Parse and validate. `origin` names the source in error messages.
    pub fn from_toml_str(src: &str, origin: &str) -> Result<Scenario, ScenarioError> {
        let sc: Scenario = toml::from_str(src).map_err(|e| match e.span() {
            Some(span) => {
                let (line, column) = line_col(src, span.start);
                ScenarioError::Parse {
                    origin: origin.to_string(),
                    line,
                    column,
                    message: e.message().to_string(),
                }
            }
            None => ScenarioError::Syntax { origin: origin.to_string(), message: e.message().to_string() },
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let src = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&src, &path.display().to_string())
    }

    /// Normalized TOML form; loading it back gives an identical scenario.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario always serializes")
    }

    pub fn to_toml_value(&self) -> toml::Value {
        toml::Value::try_from(self).expect("scenario always serializes")
    }

    pub fn from_toml_value(v: toml::Value) -> Result<Scenario, ScenarioError> {
        let sc: Scenario = v
            .try_into()
            .map_err(|e: toml::de::Error| ScenarioError::Invalid(e.message().to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        self.orbit.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if !(self.mu_earth_m3ps2 > 0.0) {
            return bad("mu_earth_m3ps2 must be positive".into());
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return bad(format!("dt_s must be positive, got {}", self.dt_s));
        }
        if !(self.t_end_s > self.dt_s && self.t_end_s.is_finite()) {
            return bad(format!("t_end_s ({}) must exceed dt_s ({})", self.t_end_s, self.dt_s));
        }
        self.target.params().map_err(|e| ScenarioError::Invalid(format!("target: {e}")))?;
        self.follower.params().map_err(|e| ScenarioError::Invalid(format!("follower: {e}")))?;
        let gamma = Vector3::from(self.initial.gamma_rad).norm();
        if !(gamma < PI) {
            return bad(format!("initial.gamma_rad has norm {gamma}, must be below π"));
        }
        let all_finite = self.initial.b_m.iter().chain(&self.initial.v_mps).chain(&self.initial.omega_radps);
        if !all_finite.into_iter().all(|x| x.is_finite()) {
            return bad("initial conditions must be finite".into());
        }
        self.apf.validate().map_err(ScenarioError::Invalid)?;
        self.smc.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let ev = &self.events;
        if !(ev.capture_eps_m > 0.0 && ev.vel_eps_mps > 0.0) {
            return bad("capture thresholds must be positive".into());
        }
        let st = &ev.stall;
        if !(st.window_s > 0.0 && st.speed_eps_mps > 0.0 && st.force_eps_n > 0.0 && st.goal_eps_m > 0.0) {
            return bad("stall detector thresholds must be positive".into());
        }
        let b0 = Vector3::from(self.initial.b_m);
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.hard_radius_m > 0.0 && o.influence_radius_m > o.hard_radius_m) {
                return bad(format!("obstacle {i}: need 0 < hard_radius_m < influence_radius_m"));
            }
            // initial follower position is exp(ρ)'s translation, close to b for small γ
            let p0 = crate::lie::exp_se3(&self.initial.rho()).position;
            if (p0 - Vector3::from(o.position_m)).norm() <= o.hard_radius_m {
                return bad(format!("obstacle {i} overlaps the follower's initial position {b0:?}"));
            }
        }
        Ok(())
    }
}
