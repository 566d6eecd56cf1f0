//! Coupled translational/rotational rigid-body dynamics in a central gravity
//! field, and the relative kinematics of a follower with respect to a target.

use crate::lie::{
    adjoint, coadjoint_ad, hat3, log_se3, split, stack, ExpCoords, LieError, Pose,
    UnifiedVelocity,
};
use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Neg, Sub};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("gravity field is singular at position norm {0} m")]
    SingularField(f64),
    #[error("invalid body parameters: {0}")]
    InvalidBody(String),
}

/// Mass and inertia of a rigid body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
}

impl BodyParams {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self, DynamicsError> {
        let p = BodyParams { mass, inertia };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(DynamicsError::InvalidBody(format!("mass {} must be positive", self.mass)));
        }
        if (self.inertia - self.inertia.transpose()).abs().max() > 1e-9 * self.inertia.abs().max() {
            return Err(DynamicsError::InvalidBody("inertia must be symmetric".into()));
        }
        let eig = SymmetricEigen::new(self.inertia).eigenvalues;
        if eig.iter().any(|&l| !(l > 0.0)) {
            return Err(DynamicsError::InvalidBody("inertia must be positive definite".into()));
        }
        let (a, b, c) = (eig[0], eig[1], eig[2]);
        let slack = 1e-12 * (a + b + c);
        if a + b < c - slack || a + c < b - slack || b + c < a - slack {
            return Err(DynamicsError::InvalidBody(
                "principal moments violate the triangle inequality".into(),
            ));
        }
        Ok(())
    }

    pub fn generalized_inertia(&self) -> GeneralizedInertia {
        GeneralizedInertia::new(self)
    }
}

/// `P = blockdiag(J, m I₃)` and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedInertia {
    p: Matrix6<f64>,
    p_inv: Matrix6<f64>,
    j: Matrix3<f64>,
    m: f64,
}

impl GeneralizedInertia {
    pub fn new(body: &BodyParams) -> Self {
        let mut p = Matrix6::zeros();
        p.fixed_view_mut::<3, 3>(0, 0).copy_from(&body.inertia);
        p.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * body.mass));
        let j_inv = body.inertia.try_inverse().expect("inertia is positive definite");
        let mut p_inv = Matrix6::zeros();
        p_inv.fixed_view_mut::<3, 3>(0, 0).copy_from(&j_inv);
        p_inv.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() / body.mass));
        GeneralizedInertia { p, p_inv, j: body.inertia, m: body.mass }
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.p
    }

    pub fn inverse(&self) -> &Matrix6<f64> {
        &self.p_inv
    }

    /// `ad*_ξ P ξ = [(JΩ) × Ω; m v × Ω]`. Equal to [`crate::lie::coad_star`] with `P ξ`, but
    /// the `m v × v` term is dropped rather than rounded, which matters at
    /// orbital speeds.
    pub fn gyroscopic(&self, xi: &UnifiedVelocity) -> Vector6<f64> {
        stack(&(self.j * xi.omega).cross(&xi.omega), &(xi.v.cross(&xi.omega) * self.m))
    }

    pub fn max_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.p).eigenvalues.max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.p).eigenvalues.min()
    }
}

/// Body pose (body → inertial) and body-frame twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub pose: Pose,
    pub xi: UnifiedVelocity,
}

impl RigidBodyState {
    pub fn new(pose: Pose, xi: UnifiedVelocity) -> Self {
        RigidBodyState { pose, xi }
    }

    /// Inertial velocity of the body origin.
    pub fn inertial_velocity(&self) -> Vector3<f64> {
        self.pose.rotation.matrix() * self.xi.v
    }

    pub fn kinetic_energy(&self, p: &GeneralizedInertia) -> f64 {
        let x = self.xi.to_vector();
        0.5 * x.dot(&(p.matrix() * x))
    }
}

/// Body-frame torque and force.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub torque: Vector3<f64>,
    pub force: Vector3<f64>,
}

impl Wrench {
    pub fn new(torque: Vector3<f64>, force: Vector3<f64>) -> Self {
        Wrench { torque, force }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_force(force: Vector3<f64>) -> Self {
        Wrench { torque: Vector3::zeros(), force }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.torque, &self.force)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        let (torque, force) = split(v);
        Wrench { torque, force }
    }

    pub fn is_finite(&self) -> bool {
        self.torque.iter().chain(self.force.iter()).all(|x| x.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench { torque: self.torque + rhs.torque, force: self.force + rhs.force }
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, rhs: Wrench) {
        self.torque += rhs.torque;
        self.force += rhs.force;
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench { torque: self.torque - rhs.torque, force: self.force - rhs.force }
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench { torque: -self.torque, force: -self.force }
    }
}

/// Time derivative of a [`RigidBodyState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRates {
    /// `ṗ = C v`
    pub position_dot: Vector3<f64>,
    /// `Ċ = C Ω^`
    pub rotation_dot: Matrix3<f64>,
    /// `ξ̇ = P⁻¹ (ad*_ξ P ξ + Σ φ)`
    pub xi_dot: Vector6<f64>,
}

/// Point-mass gravity force plus gravity-gradient torque, in body axes.
pub fn gravity_wrench(
    state: &RigidBodyState,
    params: &BodyParams,
    mu_earth: f64,
) -> Result<Wrench, DynamicsError> {
    let r_i = state.pose.position;
    let r = r_i.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(DynamicsError::SingularField(r));
    }
    let r_b = state.pose.rotation.matrix().transpose() * r_i;
    let r3 = r * r * r;
    let force = r_b * (-mu_earth * params.mass / r3);
    let torque = r_b.cross(&(params.inertia * r_b)) * (3.0 * mu_earth / (r3 * r * r));
    Ok(Wrench { torque, force })
}

/// Rigid-body rates under the sum of `wrenches`.
pub fn body_derivative(
    state: &RigidBodyState,
    inertia: &GeneralizedInertia,
    wrenches: &[Wrench],
) -> BodyRates {
    let c = state.pose.rotation.matrix();
    let mut rhs = inertia.gyroscopic(&state.xi);
    for w in wrenches {
        rhs += w.to_vector();
    }
    BodyRates {
        position_dot: c * state.xi.v,
        rotation_dot: c * hat3(&state.xi.omega),
        xi_dot: inertia.inverse() * rhs,
    }
}

/// Follower rates: gravity, disturbance, control and guidance wrenches summed.
pub fn follower_derivative(
    state: &RigidBodyState,
    inertia: &GeneralizedInertia,
    gravity: &Wrench,
    disturbance: &Wrench,
    control: &Wrench,
    apf: &Wrench,
) -> BodyRates {
    body_derivative(state, inertia, &[*gravity, *disturbance, *control, *apf])
}

/// Follower configuration relative to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeState {
    /// `H = H_t⁻¹ H_f` (follower → target frame).
    pub h: Pose,
    pub rho: ExpCoords,
    /// `ξ̃ = ξ_f − Ad_{H⁻¹} ξ_t`, follower body frame.
    pub xi_rel: UnifiedVelocity,
}

impl RelativeState {
    /// Follower position in the target frame.
    pub fn position(&self) -> Vector3<f64> {
        self.h.position
    }

    /// Rate of change of [`Self::position`] as seen in the target frame.
    pub fn position_rate(&self) -> Vector3<f64> {
        self.h.rotation.matrix() * self.xi_rel.v
    }
}

pub fn relative_pose(
    target: &RigidBodyState,
    follower: &RigidBodyState,
) -> Result<RelativeState, LieError> {
    let h = target.pose.inverse().compose(&follower.pose);
    let rho = log_se3(&h).map_err(|e| match e {
        LieError::BranchAmbiguity { angle } => LieError::OutOfChart { angle },
        other => other,
    })?;
    let xi_t_in_f = adjoint(&h.inverse()) * target.xi.to_vector();
    let xi_rel = UnifiedVelocity::from_vector(&(follower.xi.to_vector() - xi_t_in_f));
    Ok(RelativeState { h, rho, xi_rel })
}

/// `ξ̃̇ = ξ̇_f + ad_ξ̃ Ad_{H⁻¹} ξ_t − Ad_{H⁻¹} ξ̇_t`.
pub fn relative_acceleration(
    rel: &RelativeState,
    target_xi: &UnifiedVelocity,
    target_xi_dot: &Vector6<f64>,
    follower_xi_dot: &Vector6<f64>,
) -> Vector6<f64> {
    let ad_inv = adjoint(&rel.h.inverse());
    follower_xi_dot + coadjoint_ad(&rel.xi_rel) * (ad_inv * target_xi.to_vector())
        - ad_inv * target_xi_dot
}

/// The part of `ξ̃̇` not produced by the follower's own wrenches:
/// `ad_ξ̃ Ad_{H⁻¹} ξ_t − Ad_{H⁻¹} ξ̇_t`.
pub fn relative_feedthrough(
    rel: &RelativeState,
    target_xi: &UnifiedVelocity,
    target_xi_dot: &Vector6<f64>,
) -> Vector6<f64> {
    relative_acceleration(rel, target_xi, target_xi_dot, &Vector6::zeros())
}

/// Inverse of [`relative_pose`]: place a follower at `exp(ρ)` from the target
/// with relative twist `ξ̃`.
pub fn follower_from_relative(
    target: &RigidBodyState,
    rho: &ExpCoords,
    xi_rel: &UnifiedVelocity,
) -> RigidBodyState {
    let h = crate::lie::exp_se3(rho);
    let pose = target.pose.compose(&h);
    let xi = xi_rel.to_vector() + adjoint(&h.inverse()) * target.xi.to_vector();
    RigidBodyState { pose, xi: UnifiedVelocity::from_vector(&xi) }
}
