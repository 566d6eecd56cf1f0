//! Fixed-step fourth-order Runge-Kutta, in a plain vector form and a
//! Lie-group (Munthe-Kaas) form for rigid bodies whose poses live on SE(3).

use crate::dynamics::RigidBodyState;
use crate::lie::{exp_se3, kinematics_jacobian, ExpCoords, UnifiedVelocity};
use nalgebra::{SVector, Vector6};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("non-finite derivative at t = {t} s (stage {stage})")]
    NonFinite { t: f64, stage: usize },
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("derivative evaluation failed at t = {t} s: {reason}")]
    Derivative { t: f64, reason: String },
}

/// Classical RK4 step for `ẋ = f(t, x)`.
pub fn rk4_step<const N: usize, F>(
    f: F,
    t: f64,
    x: &SVector<f64, N>,
    dt: f64,
) -> Result<SVector<f64, N>, IntegrationError>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    if !(dt > 0.0) {
        return Err(IntegrationError::BadStep(dt));
    }
    let check = |k: &SVector<f64, N>, stage| {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(IntegrationError::NonFinite { t, stage })
        }
    };
    let k1 = f(t, x);
    check(&k1, 1)?;
    let k2 = f(t + 0.5 * dt, &(x + k1 * (0.5 * dt)));
    check(&k2, 2)?;
    let k3 = f(t + 0.5 * dt, &(x + k2 * (0.5 * dt)));
    check(&k3, 3)?;
    let k4 = f(t + dt, &(x + k3 * dt));
    check(&k4, 4)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// One RKMK4 step for a set of rigid bodies.
///
/// `accel(t, states)` returns `ξ̇` for every body. Each pose is advanced as
/// `H · exp(Σ wᵢ kᵢ)` where the stage increments `kᵢ = dt · G(uᵢ) ξᵢ` carry the
/// `dexp⁻¹` correction, so rotations stay on SO(3) and the pose update keeps
/// fourth order.
pub fn rkmk4_step<F>(
    accel: F,
    t: f64,
    bodies: &[RigidBodyState],
    dt: f64,
) -> Result<Vec<RigidBodyState>, IntegrationError>
where
    F: Fn(f64, &[RigidBodyState]) -> Result<Vec<Vector6<f64>>, IntegrationError>,
{
    if !(dt > 0.0) {
        return Err(IntegrationError::BadStep(dt));
    }
    let n = bodies.len();
    let xi0: Vec<Vector6<f64>> = bodies.iter().map(|b| b.xi.to_vector()).collect();

    let stage_states = |u: &[Vector6<f64>], dxi: &[Vector6<f64>], scale: f64| -> Vec<RigidBodyState> {
        (0..n)
            .map(|i| {
                let pose = bodies[i]
                    .pose
                    .compose(&exp_se3(&ExpCoords::from_vector(&(u[i] * scale))));
                let xi = UnifiedVelocity::from_vector(&(xi0[i] + dxi[i] * scale));
                RigidBodyState { pose, xi }
            })
            .collect()
    };
    let algebra_increment = |u: &[Vector6<f64>], scale: f64, states: &[RigidBodyState], stage| {
        (0..n)
            .map(|i| {
                let g = kinematics_jacobian(&ExpCoords::from_vector(&(u[i] * scale)))
                    .map_err(|_| IntegrationError::NonFinite { t, stage })?;
                Ok(g * states[i].xi.to_vector() * dt)
            })
            .collect::<Result<Vec<_>, IntegrationError>>()
    };
    let finite = |k: &[Vector6<f64>], stage| {
        if k.iter().all(|v| v.iter().all(|x| x.is_finite())) {
            Ok(())
        } else {
            Err(IntegrationError::NonFinite { t, stage })
        }
    };
    let times_dt = |a: Vec<Vector6<f64>>| a.into_iter().map(|x| x * dt).collect::<Vec<_>>();

    let zero = vec![Vector6::zeros(); n];

    let s1 = bodies.to_vec();
    let a1 = times_dt(accel(t, &s1)?);
    finite(&a1, 1)?;
    let u1 = algebra_increment(&zero, 0.0, &s1, 1)?;

    let s2 = stage_states(&u1, &a1, 0.5);
    let a2 = times_dt(accel(t + 0.5 * dt, &s2)?);
    finite(&a2, 2)?;
    let u2 = algebra_increment(&u1, 0.5, &s2, 2)?;

    let s3 = stage_states(&u2, &a2, 0.5);
    let a3 = times_dt(accel(t + 0.5 * dt, &s3)?);
    finite(&a3, 3)?;
    let u3 = algebra_increment(&u2, 0.5, &s3, 3)?;

    let s4 = stage_states(&u3, &a3, 1.0);
    let a4 = times_dt(accel(t + dt, &s4)?);
    finite(&a4, 4)?;
    let u4 = algebra_increment(&u3, 1.0, &s4, 4)?;

    Ok((0..n)
        .map(|i| {
            let u = (u1[i] + u2[i] * 2.0 + u3[i] * 2.0 + u4[i]) / 6.0;
            let dxi = (a1[i] + a2[i] * 2.0 + a3[i] * 2.0 + a4[i]) / 6.0;
            RigidBodyState {
                pose: bodies[i].pose.compose(&exp_se3(&ExpCoords::from_vector(&u))),
                xi: UnifiedVelocity::from_vector(&(xi0[i] + dxi)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{body_derivative, BodyParams};
    use crate::lie::Pose;
    use nalgebra::{Matrix3, Vector1, Vector3};

    #[test]
    fn constant_dynamics_leave_state_unchanged() {
        let x = Vector1::new(3.25);
        let y = rk4_step(|_, _| Vector1::zeros(), 0.0, &x, 0.1).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn exponential_decay_one_step() {
        let y = rk4_step(|_, x: &Vector1<f64>| -x, 0.0, &Vector1::new(1.0), 0.1).unwrap();
        // One RK4 step on a linear system is the 4th-order Taylor polynomial.
        let h = 0.1f64;
        let taylor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((y[0] - taylor).abs() < 1e-15);
        // and agrees with e^{-0.1} = 0.90483742 to the truncation error (~8e-8)
        assert!((y[0] - 0.90483742).abs() < 1e-7, "{}", y[0]);
    }

    #[test]
    fn rejects_non_positive_step_and_nan() {
        assert!(rk4_step(|_, x: &Vector1<f64>| -x, 0.0, &Vector1::new(1.0), 0.0).is_err());
        assert!(rk4_step(|_, _: &Vector1<f64>| Vector1::new(f64::NAN), 0.0, &Vector1::new(1.0), 0.1).is_err());
    }

    #[test]
    fn rotation_stays_orthonormal() {
        let body = BodyParams::new(1.0, Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 2.5))).unwrap();
        let p = body.generalized_inertia();
        let mut s = vec![RigidBodyState::new(
            Pose::identity(),
            UnifiedVelocity::new(Vector3::new(0.4, 1.1, -0.7), Vector3::new(1.0, 0.0, 0.0)),
        )];
        for k in 0..2000 {
            s = rkmk4_step(
                |_, b| Ok(vec![body_derivative(&b[0], &p, &[]).xi_dot]),
                k as f64 * 0.05,
                &s,
                0.05,
            )
            .unwrap();
        }
        assert!(s[0].pose.rotation.orthonormality_error() < 1e-12);
    }
}
