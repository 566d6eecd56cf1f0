//! Non-singular fixed-time sliding mode control on the relative configuration.

use crate::dynamics::{relative_feedthrough, GeneralizedInertia, RelativeState, Wrench};
use crate::lie::{kinematics_jacobian, ExpCoords, LieError, UnifiedVelocity};
use nalgebra::{Matrix6, SVector, Vector6};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error(transparent)]
    Chart(#[from] LieError),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("fixed-time bound is infinite for l1 = {l1}, l2 = {l2}")]
    InfiniteBound { l1: f64, l2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceVariant {
    /// `s = ξ̃ + μ₁ sig^{k₁}(ρ) + μ₂ sig^{k₂}(ρ)`
    #[default]
    RhoRho,
    /// `s = ξ̃ + μ₁ sig^{k₁}(ρ) + μ₂ sig^{k₂}(ξ̃)`
    RhoXi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcGains {
    pub mu1: f64,
    pub k1: f64,
    pub mu2: f64,
    pub k2: f64,
    pub mus1: f64,
    pub l1: f64,
    pub mus2: f64,
    pub l2: f64,
    pub boundary_layer: f64,
    #[serde(default = "default_sat_eps")]
    pub sat_eps: f64,
    #[serde(default)]
    pub surface_variant: SurfaceVariant,
    /// Feed the true disturbance to the controller; `false` feeds zero.
    #[serde(default = "default_true")]
    pub feed_disturbance: bool,
}

fn default_sat_eps() -> f64 {
    1e-6
}

fn default_true() -> bool {
    true
}

impl SmcGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: &str| Err(ControlError::InvalidGains(m.to_string()));
        let positive = [self.mu1, self.mu2, self.mus1, self.mus2, self.boundary_layer, self.sat_eps];
        if !positive.iter().all(|x| *x > 0.0 && x.is_finite()) {
            return bad("mu1, mu2, mus1, mus2, boundary_layer and sat_eps must be positive");
        }
        if !(self.k1 > 0.0 && self.k1 <= 1.0) {
            return bad("k1 must lie in (0, 1]");
        }
        if !(self.k2 > 1.0 && self.k2.is_finite()) {
            return bad("k2 must exceed 1");
        }
        if !(self.l1 > 0.0 && self.l1 <= 1.0) {
            return bad("l1 must lie in (0, 1]");
        }
        if !(self.l2 > 1.0 && self.l2.is_finite()) {
            return bad("l2 must exceed 1");
        }
        Ok(())
    }
}

/// Sliding variable, Lyapunov value and fixed-time bound at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingState {
    pub s: Vector6<f64>,
    pub v1: f64,
    pub tmax: f64,
}

pub fn sig_scalar(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(a)
    }
}

/// `|x_i|^a sign(x_i)` componentwise.
pub fn sig<const N: usize>(x: &SVector<f64, N>, a: f64) -> SVector<f64, N> {
    x.map(|v| sig_scalar(v, a))
}

/// `sig` with a linear segment through the origin inside `|x| < layer` for
/// steep exponents.
fn reaching_sig(x: &Vector6<f64>, a: f64, layer: f64) -> Vector6<f64> {
    if a >= 0.25 {
        return sig(x, a);
    }
    let edge = layer.powf(a);
    x.map(|v| if v.abs() < layer { v / layer * edge } else { sig_scalar(v, a) })
}

pub fn sliding_surface(rho: &ExpCoords, xi_rel: &UnifiedVelocity, gains: &SmcGains) -> Vector6<f64> {
    let r = rho.to_vector();
    let xi = xi_rel.to_vector();
    let second = match gains.surface_variant {
        SurfaceVariant::RhoRho => sig(&r, gains.k2),
        SurfaceVariant::RhoXi => sig(&xi, gains.k2),
    };
    xi + sig(&r, gains.k1) * gains.mu1 + second * gains.mu2
}

fn q_diag(x: &Vector6<f64>, mu: f64, k: f64, floor: f64) -> Matrix6<f64> {
    Matrix6::from_diagonal(&x.map(|v| mu * k * v.abs().max(floor).powf(k - 1.0)))
}

/// Everything the controller needs at one instant.
#[derive(Debug, Clone, Copy)]
pub struct ControlInputs<'a> {
    pub rel: &'a RelativeState,
    pub follower_xi: &'a UnifiedVelocity,
    pub target_xi: &'a UnifiedVelocity,
    pub target_xi_dot: &'a Vector6<f64>,
    pub gravity: &'a Wrench,
    pub disturbance: &'a Wrench,
    pub inertia: &'a GeneralizedInertia,
}

/// Control wrench on the follower. The reaching terms enter as wrenches, so
/// the closed loop satisfies `P ṡ = −μ_s1 sig^{l₁}(s) − μ_s2 sig^{l₂}(s)`.
pub fn control_wrench(inp: &ControlInputs<'_>, gains: &SmcGains) -> Result<Wrench, ControlError> {
    let rel = inp.rel;
    let g = kinematics_jacobian(&rel.rho)?;
    let r = rel.rho.to_vector();
    let xi = rel.xi_rel.to_vector();
    let s = sliding_surface(&rel.rho, &rel.xi_rel, gains);
    let p = inp.inertia.matrix();

    let reaching = reaching_sig(&s, gains.l1, gains.boundary_layer) * gains.mus1
        + reaching_sig(&s, gains.l2, gains.boundary_layer) * gains.mus2;
    let feed = relative_feedthrough(rel, inp.target_xi, inp.target_xi_dot);
    let gyro = inp.inertia.gyroscopic(inp.follower_xi);
    let known = gyro + inp.gravity.to_vector() + inp.disturbance.to_vector() + p * feed;

    let q1 = q_diag(&r, gains.mu1, gains.k1, gains.sat_eps);
    let phi = match gains.surface_variant {
        SurfaceVariant::RhoRho => {
            let q2 = q_diag(&r, gains.mu2, gains.k2, 0.0);
            -known - p * ((q1 + q2) * (g * xi)) - reaching
        }
        SurfaceVariant::RhoXi => {
            let q2 = q_diag(&xi, gains.mu2, gains.k2, 0.0) + Matrix6::identity();
            let q2_inv = q2.map_diagonal(|d| 1.0 / d);
            let accel = Matrix6::from_diagonal(&q2_inv)
                * (-(q1 * (g * xi)) - inp.inertia.inverse() * reaching);
            p * accel - known
        }
    };
    Ok(Wrench::from_vector(&phi))
}

/// Fixed-time constants `k_t1`, `k_t2` and `T_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedTimeBound {
    pub kt1: f64,
    pub kt2: f64,
    pub tmax: f64,
}

/// `T_max = 2/(k_t1 (1 − l₁)) + 2/(k_t2 (l₂ − 1))`
pub fn fixed_time_bound(kt1: f64, kt2: f64, l1: f64, l2: f64) -> Result<f64, ControlError> {
    if l1 >= 1.0 || l2 <= 1.0 {
        return Err(ControlError::InfiniteBound { l1, l2 });
    }
    Ok(2.0 / (kt1 * (1.0 - l1)) + 2.0 / (kt2 * (l2 - 1.0)))
}

/// `k_t1 = μ_s1 (2/λ)^{(l₁+1)/2}`, `k_t2 = μ_s2 6^{−(l₂−1)/2} (2/λ)^{(l₂+1)/2}`
/// with `λ = λ_max(P)`. The factor `6^{−(l₂−1)/2}` comes from
/// `Σ|s_i|^{l₂+1} ≥ 6^{−(l₂−1)/2} ‖s‖^{l₂+1}`.
pub fn lyapunov_constants(gains: &SmcGains, inertia: &GeneralizedInertia) -> (f64, f64) {
    let c = 2.0 / inertia.max_eigenvalue();
    let kt1 = gains.mus1 * c.powf((gains.l1 + 1.0) / 2.0);
    let kt2 = gains.mus2 * 6f64.powf(-(gains.l2 - 1.0) / 2.0) * c.powf((gains.l2 + 1.0) / 2.0);
    (kt1, kt2)
}

pub fn settling_time_bound(
    gains: &SmcGains,
    inertia: &GeneralizedInertia,
) -> Result<FixedTimeBound, ControlError> {
    let (kt1, kt2) = lyapunov_constants(gains, inertia);
    Ok(FixedTimeBound { kt1, kt2, tmax: fixed_time_bound(kt1, kt2, gains.l1, gains.l2)? })
}

/// `V₁ = ½ sᵀ P s` and the bound `−k_t1 V^{(l₁+1)/2} − k_t2 V^{(l₂+1)/2}`.
pub fn lyapunov_diagnostics(
    s: &Vector6<f64>,
    inertia: &GeneralizedInertia,
    gains: &SmcGains,
) -> (f64, f64) {
    let v1 = 0.5 * s.dot(&(inertia.matrix() * s));
    let (kt1, kt2) = lyapunov_constants(gains, inertia);
    let bound = -kt1 * v1.powf((gains.l1 + 1.0) / 2.0) - kt2 * v1.powf((gains.l2 + 1.0) / 2.0);
    (v1, bound)
}

/// Right-hand side of the reaching law, `−μ_s1 sig^{l₁}(s) − μ_s2 sig^{l₂}(s)`.
pub fn reaching_law(s: &Vector6<f64>, gains: &SmcGains) -> Vector6<f64> {
    -(reaching_sig(s, gains.l1, gains.boundary_layer) * gains.mus1
        + reaching_sig(s, gains.l2, gains.boundary_layer) * gains.mus2)
}
