//! SO(3)/SE(3) group and algebra operations.
//!
//! Conventions used throughout the crate:
//!
//! * Rotations map body coordinates into the parent frame (body → inertial for
//!   absolute poses, follower → target for the relative pose), so `ṗ = C v`
//!   and `Ċ = C Ω^` with body-frame velocities.
//! * Twists, wrenches and exponential coordinates are stacked rotation-first:
//!   `ξ = [Ω; v]`, `φ = [torque; force]`, `ρ = [γ; b]`.
//! * Poses evolve left-trivialized, `Ḣ = H ξ^`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Mul;

/// Below this rotation angle the trigonometric coefficient functions are
/// evaluated by their 4th-order Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Margin on `trace(R) + 1` below which the logarithm is refused.
pub const BRANCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("rotation angle {angle} rad is on the logarithm branch cut (angle = pi)")]
    BranchAmbiguity { angle: f64 },
    #[error("rotation angle {angle} rad is outside the principal exponential chart")]
    OutOfChart { angle: f64 },
}

/// Skew-symmetric matrix with `hat3(w) * u == w.cross(u)`.
pub fn hat3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`hat3`]; reads the antisymmetric part only.
pub fn vee3(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

// Coefficient functions of the SO(3)/SE(3) series, each with its small-angle
// expansion. The higher-order ones cancel badly in closed form, so their
// series region is wider (truncation error there is below 2e-11).
const SERIES_ANGLE: f64 = 0.1;

/// sin θ / θ
fn coef_a(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// (1 − cos θ) / θ², evaluated as ½ (sin(θ/2) / (θ/2))² to avoid cancellation
fn coef_b(theta: f64) -> f64 {
    let h = coef_a(0.5 * theta);
    0.5 * h * h
}

/// (θ − sin θ) / θ³
fn coef_c(theta: f64) -> f64 {
    if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// 1/θ² − (1 + cos θ) / (2 θ sin θ)
fn coef_d(theta: f64) -> f64 {
    if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    }
}

/// (θ² + 2 cos θ − 2) / (2 θ⁴)
fn coef_e(theta: f64) -> f64 {
    if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0
    } else {
        let t2 = theta * theta;
        (t2 + 2.0 * theta.cos() - 2.0) / (2.0 * t2 * t2)
    }
}

/// (2θ − 3 sin θ + θ cos θ) / (2 θ⁵)
fn coef_f(theta: f64) -> f64 {
    if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0
    } else {
        let t2 = theta * theta;
        (2.0 * theta - 3.0 * theta.sin() + theta * theta.cos()) / (2.0 * t2 * t2 * theta)
    }
}

/// Rotation matrix, body → parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix without checking orthonormality.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    /// Projects an approximately orthonormal matrix onto SO(3).
    pub fn from_matrix_orthonormalized(m: Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u");
        let v_t = svd.v_t.expect("svd v_t");
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < 0.0 {
            d[(2, 2)] = -1.0;
        }
        Rotation(u * d * v_t)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        let s = vee3(&self.0).norm();
        let c = 0.5 * (self.0.trace() - 1.0);
        s.atan2(c)
    }

    /// Largest deviation of `RᵀR` from identity.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

impl Mul<&Vector3<f64>> for &Rotation {
    type Output = Vector3<f64>;
    fn mul(self, rhs: &Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// SO(3) exponential (Rodrigues).
pub fn exp_so3(gamma: &Vector3<f64>) -> Rotation {
    let theta = gamma.norm();
    let k = hat3(gamma);
    Rotation(Matrix3::identity() + coef_a(theta) * k + coef_b(theta) * k * k)
}

/// Principal SO(3) logarithm; fails at angle π where the axis sign is ambiguous.
pub fn log_so3(r: &Rotation) -> Result<Vector3<f64>, LieError> {
    let m = r.matrix();
    let tr = m.trace();
    if tr <= -1.0 + BRANCH_TOL {
        return Err(LieError::BranchAmbiguity { angle: r.angle() });
    }
    let theta = r.angle();
    let w = vee3(m);
    if theta < SMALL_ANGLE {
        // θ / sin θ
        let t2 = theta * theta;
        return Ok(w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if theta > PI - 1e-3 {
        // Antisymmetric part degenerates near π; recover the axis from the
        // symmetric part and take its sign from the antisymmetric remainder.
        let b = coef_b(theta);
        let sym = (m + m.transpose()) * 0.5 - Matrix3::identity();
        // sym = (1 - cos θ) (n nᵀ - I)
        let nn = sym / (b * theta * theta) + Matrix3::identity();
        let (i, _) = (0..3)
            .map(|i| (i, nn[(i, i)]))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut n = Vector3::new(nn[(0, i)], nn[(1, i)], nn[(2, i)]);
        n /= n.norm();
        if n.dot(&w) < 0.0 {
            n = -n;
        }
        return Ok(n * theta);
    }
    Ok(w * (theta / theta.sin()))
}

/// Left Jacobian of SO(3).
pub fn left_jacobian_so3(gamma: &Vector3<f64>) -> Matrix3<f64> {
    let theta = gamma.norm();
    let k = hat3(gamma);
    Matrix3::identity() + coef_b(theta) * k + coef_c(theta) * k * k
}

/// Inverse left Jacobian of SO(3).
pub fn left_jacobian_so3_inv(gamma: &Vector3<f64>) -> Matrix3<f64> {
    let theta = gamma.norm();
    let k = hat3(gamma);
    Matrix3::identity() - 0.5 * k + coef_d(theta) * k * k
}

/// Rigid-body pose (rotation + position of the body origin in the parent frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub position: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose { rotation: Rotation::identity(), position: Vector3::zeros() }
    }

    pub fn new(rotation: Rotation, position: Vector3<f64>) -> Self {
        Pose { rotation, position }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, position: -(rt.matrix() * self.position) }
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            position: self.rotation.matrix() * other.position + self.position,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.matrix() * p + self.position
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Exponential coordinates `ρ = [γ; b]` of a pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpCoords {
    pub gamma: Vector3<f64>,
    pub b: Vector3<f64>,
}

impl ExpCoords {
    pub fn new(gamma: Vector3<f64>, b: Vector3<f64>) -> Self {
        ExpCoords { gamma, b }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.gamma, &self.b)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        let (gamma, b) = split(v);
        ExpCoords { gamma, b }
    }
}

/// Body-frame twist `ξ = [Ω; v]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnifiedVelocity {
    pub omega: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl UnifiedVelocity {
    pub fn new(omega: Vector3<f64>, v: Vector3<f64>) -> Self {
        UnifiedVelocity { omega, v }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.omega, &self.v)
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        let (omega, v) = split(x);
        UnifiedVelocity { omega, v }
    }

    pub fn is_finite(&self) -> bool {
        self.omega.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

pub fn stack(top: &Vector3<f64>, bottom: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

pub fn split(x: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (Vector3::new(x[0], x[1], x[2]), Vector3::new(x[3], x[4], x[5]))
}

/// SE(3) exponential.
pub fn exp_se3(rho: &ExpCoords) -> Pose {
    Pose {
        rotation: exp_so3(&rho.gamma),
        position: left_jacobian_so3(&rho.gamma) * rho.b,
    }
}

/// Principal SE(3) logarithm.
pub fn log_se3(h: &Pose) -> Result<ExpCoords, LieError> {
    let gamma = log_so3(&h.rotation)?;
    let b = left_jacobian_so3_inv(&gamma) * h.position;
    Ok(ExpCoords { gamma, b })
}

/// `Ad_H = [R, 0; p^ R, R]`.
pub fn adjoint(h: &Pose) -> Matrix6<f64> {
    let r = h.rotation.matrix();
    let mut ad = Matrix6::zeros();
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    ad.fixed_view_mut::<3, 3>(3, 0).copy_from(&(hat3(&h.position) * r));
    ad
}

/// Algebra commutator matrix `ad_ξ = [Ω^, 0; v^, Ω^]`.
pub fn coadjoint_ad(xi: &UnifiedVelocity) -> Matrix6<f64> {
    let w = hat3(&xi.omega);
    let mut ad = Matrix6::zeros();
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    ad.fixed_view_mut::<3, 3>(3, 0).copy_from(&hat3(&xi.v));
    ad
}

/// `ad*_ξ μ = (ad_ξ)ᵀ μ`, evaluated blockwise without forming the matrix.
///
/// For `μ = [h; p]` this is `[h × Ω + p × v; p × Ω]`, the gyroscopic term of
/// the rigid-body equations.
pub fn coad_star(xi: &UnifiedVelocity, momentum: &Vector6<f64>) -> Vector6<f64> {
    let (h, p) = split(momentum);
    stack(&(h.cross(&xi.omega) + p.cross(&xi.v)), &p.cross(&xi.omega))
}

/// `ρ̇ = G(ρ) ξ` for `H = exp(ρ)` and `Ḣ = H ξ^`: the inverse right Jacobian of
/// the SE(3) exponential.
pub fn kinematics_jacobian(rho: &ExpCoords) -> Result<Matrix6<f64>, LieError> {
    let theta = rho.gamma.norm();
    if theta >= PI {
        return Err(LieError::OutOfChart { angle: theta });
    }
    // J_r(ρ) = J_l(−ρ)
    let w = -rho.gamma;
    let u = -rho.b;
    let jinv = left_jacobian_so3_inv(&w);
    let q = se3_q_block(&w, &u);
    let mut g = Matrix6::zeros();
    g.fixed_view_mut::<3, 3>(0, 0).copy_from(&jinv);
    g.fixed_view_mut::<3, 3>(3, 3).copy_from(&jinv);
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-jinv * q * jinv));
    Ok(g)
}

/// Off-diagonal block of the SE(3) left Jacobian `[J, 0; Q, J]`.
fn se3_q_block(w: &Vector3<f64>, u: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let wx = hat3(w);
    let ux = hat3(u);
    let wu = wx * ux;
    let uw = ux * wx;
    let wuw = wu * wx;
    0.5 * ux
        + coef_c(theta) * (wu + uw + wuw)
        + coef_e(theta) * (wx * wu + uw * wx - 3.0 * wuw)
        + coef_f(theta) * (wuw * wx + wx * wuw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v3() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    #[test]
    fn hat_of_zero_is_zero() {
        assert_eq!(hat3(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn hat_matches_cross_product() {
        let y = hat3(&Vector3::x()) * Vector3::y();
        assert_eq!(y, Vector3::z());
    }

    #[test]
    fn exp_quarter_turn_about_z() {
        let r = exp_so3(&Vector3::new(0.0, 0.0, PI / 2.0));
        // Rodrigues by hand: x̂ → ŷ, ŷ → −x̂.
        assert_relative_eq!(r * Vector3::x(), Vector3::y(), epsilon = 1e-15);
        assert_relative_eq!(r * Vector3::y(), -Vector3::x(), epsilon = 1e-15);
        assert_relative_eq!(r.angle(), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn log_rejects_half_turn() {
        let r = exp_so3(&Vector3::new(PI, 0.0, 0.0));
        assert!(matches!(log_so3(&r), Err(LieError::BranchAmbiguity { .. })));
    }

    #[test]
    fn log_near_half_turn_keeps_axis_sign() {
        let g = Vector3::new(0.3, -0.5, 0.8).normalize() * (PI - 1e-4);
        let back = log_so3(&exp_so3(&g)).unwrap();
        assert_relative_eq!(back, g, epsilon = 1e-9);
    }

    #[test]
    fn series_branches_agree_with_closed_forms() {
        // both branches agree across each switch point; the closed forms of
        // the θ⁴ and θ⁵ quotients are only good to ~1e-10 at 0.1
        for (switch, fs) in [
            (SMALL_ANGLE, &[coef_a as fn(f64) -> f64, coef_b][..]),
            (SERIES_ANGLE, &[coef_c, coef_d, coef_e, coef_f][..]),
        ] {
            for f in fs {
                assert_relative_eq!(f(switch * (1.0 + 1e-13)), f(switch * (1.0 - 1e-13)), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pure_translation_exp() {
        let b = Vector3::new(1.0, -2.0, 3.0);
        let h = exp_se3(&ExpCoords::new(Vector3::zeros(), b));
        assert_eq!(h.rotation, Rotation::identity());
        assert_eq!(h.position, b);
        assert_eq!(exp_se3(&ExpCoords::zero()), Pose::identity());
    }

    #[test]
    fn jacobian_is_identity_at_origin() {
        assert_eq!(kinematics_jacobian(&ExpCoords::zero()).unwrap(), Matrix6::identity());
    }

    #[test]
    fn jacobian_passes_commuting_flow() {
        let rho = ExpCoords::new(Vector3::zeros(), Vector3::new(2.0, 0.0, 0.0));
        let xi = Vector6::new(0.0, 0.0, 0.0, 0.7, 0.0, 0.0);
        let g = kinematics_jacobian(&rho).unwrap();
        assert_relative_eq!(g * xi, xi, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_refuses_chart_boundary() {
        let rho = ExpCoords::new(Vector3::new(0.0, PI, 0.0), Vector3::zeros());
        assert!(kinematics_jacobian(&rho).is_err());
    }

    #[test]
    fn adjoint_of_identity() {
        assert_eq!(adjoint(&Pose::identity()), Matrix6::identity());
    }

    #[test]
    fn coad_star_matches_transpose_and_euler() {
        let xi = UnifiedVelocity::new(Vector3::new(0.1, -0.4, 0.3), Vector3::zeros());
        let j = Matrix3::from_diagonal(&Vector3::new(2.0, 3.0, 5.0));
        let mut p = Matrix6::zeros();
        p.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
        p.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * 4.0));
        let mu = p * xi.to_vector();
        let got = coad_star(&xi, &mu);
        assert_relative_eq!(got, coadjoint_ad(&xi).transpose() * mu, epsilon = 1e-15);
        // Euler: J Ω̇ = (J Ω) × Ω = −Ω × J Ω
        let euler = -xi.omega.cross(&(j * xi.omega));
        assert_relative_eq!(split(&got).0, euler, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn hat_is_antisymmetric(w in v3()) {
            prop_assert_eq!(hat3(&w).transpose(), -hat3(&w));
        }

        #[test]
        fn hat_anticommutes(w in v3(), u in v3()) {
            let d = hat3(&w) * u + hat3(&u) * w;
            prop_assert!(d.norm() < 1e-15);
        }

        #[test]
        fn exp_rotation_angle_is_norm(w in v3()) {
            let g = w * 1.5;
            let r = exp_so3(&g);
            prop_assert!((r.angle() - g.norm()).abs() < 1e-12);
            prop_assert!(r.orthonormality_error() < 1e-12);
            prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
        }
    }
}
