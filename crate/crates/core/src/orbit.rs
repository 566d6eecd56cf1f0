//! Keplerian orbits and an LVLH-aligned initial state for the target.

use crate::dynamics::RigidBodyState;
use crate::lie::{Pose, Rotation, UnifiedVelocity};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const EARTH_MU: f64 = 3.986004418e14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrbitError {
    #[error("orbit must be elliptic with positive semi-major axis (a = {a}, e = {e})")]
    NotElliptic { a: f64, e: f64 },
    #[error("degenerate state: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitalElements {
    pub semi_major_axis_m: f64,
    pub eccentricity: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub arg_periapsis_rad: f64,
    pub true_anomaly_rad: f64,
}

impl OrbitalElements {
    pub fn validate(&self) -> Result<(), OrbitError> {
        let (a, e) = (self.semi_major_axis_m, self.eccentricity);
        if !(a > 0.0 && (0.0..1.0).contains(&e)) {
            return Err(OrbitError::NotElliptic { a, e });
        }
        Ok(())
    }

    pub fn period(&self, mu: f64) -> f64 {
        TAU * (self.semi_major_axis_m.powi(3) / mu).sqrt()
    }

    pub fn periapsis_radius(&self) -> f64 {
        self.semi_major_axis_m * (1.0 - self.eccentricity)
    }

    fn perifocal_to_inertial(&self) -> Matrix3<f64> {
        let rz = |a: f64| Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0);
        let rx = |a: f64| Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos());
        rz(self.raan_rad) * rx(self.inclination_rad) * rz(self.arg_periapsis_rad)
    }
}

pub fn semi_major_axis_for_period(period_s: f64, mu: f64) -> f64 {
    (mu * (period_s / TAU).powi(2)).cbrt()
}

/// Inertial position and velocity.
pub fn elements_to_state(el: &OrbitalElements, mu: f64) -> Result<(Vector3<f64>, Vector3<f64>), OrbitError> {
    el.validate()?;
    let (a, e, nu) = (el.semi_major_axis_m, el.eccentricity, el.true_anomaly_rad);
    let p = a * (1.0 - e * e);
    let r = p / (1.0 + e * nu.cos());
    let r_pf = Vector3::new(r * nu.cos(), r * nu.sin(), 0.0);
    let k = (mu / p).sqrt();
    let v_pf = Vector3::new(-k * nu.sin(), k * (e + nu.cos()), 0.0);
    let q = el.perifocal_to_inertial();
    Ok((q * r_pf, q * v_pf))
}

/// Classical elements of an elliptic, non-equatorial state.
pub fn state_to_elements(r: &Vector3<f64>, v: &Vector3<f64>, mu: f64) -> Result<OrbitalElements, OrbitError> {
    let h = r.cross(v);
    let rn = r.norm();
    if h.norm() == 0.0 || rn == 0.0 {
        return Err(OrbitError::Degenerate("zero radius or angular momentum"));
    }
    let n = Vector3::z().cross(&h);
    if n.norm() < 1e-12 * h.norm() {
        return Err(OrbitError::Degenerate("equatorial orbit has no ascending node"));
    }
    let e_vec = v.cross(&h) / mu - r / rn;
    let e = e_vec.norm();
    if e < 1e-12 {
        return Err(OrbitError::Degenerate("circular orbit has no periapsis"));
    }
    let energy = 0.5 * v.norm_squared() - mu / rn;
    let a = -mu / (2.0 * energy);
    if !(a > 0.0 && e < 1.0) {
        return Err(OrbitError::NotElliptic { a, e });
    }
    let angle = |x: &Vector3<f64>, y: &Vector3<f64>| x.dot(y) / (x.norm() * y.norm());
    let wrap = |theta: f64, flip: bool| if flip { TAU - theta } else { theta };
    let inc = (h.z / h.norm()).clamp(-1.0, 1.0).acos();
    let raan = wrap((n.x / n.norm()).clamp(-1.0, 1.0).acos(), n.y < 0.0);
    let argp = wrap(angle(&n, &e_vec).clamp(-1.0, 1.0).acos(), e_vec.z < 0.0);
    let nu = wrap(angle(&e_vec, r).clamp(-1.0, 1.0).acos(), r.dot(v) < 0.0);
    Ok(OrbitalElements {
        semi_major_axis_m: a,
        eccentricity: e,
        inclination_rad: inc,
        raan_rad: raan,
        arg_periapsis_rad: argp,
        true_anomaly_rad: nu,
    })
}

/// LVLH axes as a body → inertial rotation: x radial, z along the orbit
/// normal, y completing the triad.
pub fn lvlh_rotation(r: &Vector3<f64>, v: &Vector3<f64>) -> Rotation {
    let x = r.normalize();
    let z = r.cross(v).normalize();
    let y = z.cross(&x);
    Rotation::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]))
}

/// Body aligned with LVLH and rotating with it, `Ω = (0, 0, |h| / r²)`.
pub fn lvlh_body_state(el: &OrbitalElements, mu: f64) -> Result<RigidBodyState, OrbitError> {
    let (r, v) = elements_to_state(el, mu)?;
    let c = lvlh_rotation(&r, &v);
    let omega = Vector3::new(0.0, 0.0, r.cross(&v).norm() / r.norm_squared());
    let v_body = c.matrix().transpose() * v;
    Ok(RigidBodyState::new(Pose::new(c, r), UnifiedVelocity::new(omega, v_body)))
}

/// Specific orbital energy and angular momentum of a point mass.
pub fn energy_and_momentum(r: &Vector3<f64>, v: &Vector3<f64>, mu: f64) -> (f64, Vector3<f64>) {
    (0.5 * v.norm_squared() - mu / r.norm(), r.cross(v))
}
