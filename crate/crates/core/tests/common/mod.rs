#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rendezvous_core::dynamics::{BodyParams, RigidBodyState};
use rendezvous_core::lie::{exp_so3, ExpCoords, Pose, UnifiedVelocity};
use rendezvous_core::scenario::Scenario;
use std::path::PathBuf;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec3(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.random_range(-scale..=scale))
}

/// Random rotation vector with angle below `max_angle`.
pub fn rotvec(rng: &mut impl Rng, max_angle: f64) -> Vector3<f64> {
    let axis = loop {
        let a = vec3(rng, 1.0);
        if a.norm() > 1e-3 {
            break a.normalize();
        }
    };
    axis * rng.random_range(0.0..max_angle)
}

pub fn exp_coords(rng: &mut impl Rng, max_angle: f64, scale: f64) -> ExpCoords {
    ExpCoords::new(rotvec(rng, max_angle), vec3(rng, scale))
}

pub fn body_params(rng: &mut impl Rng) -> BodyParams {
    // principal moments satisfying the triangle inequality
    let a: f64 = rng.random_range(5.0..50.0);
    let b: f64 = rng.random_range(5.0..50.0);
    let c = rng.random_range((a - b).abs() + 1.0..a + b);
    BodyParams::new(rng.random_range(10.0..500.0), Matrix3::from_diagonal(&Vector3::new(a, b, c))).unwrap()
}

pub fn body_state(rng: &mut impl Rng, omega: f64, v: f64) -> RigidBodyState {
    let pose = Pose::new(exp_so3(&rotvec(rng, 3.0)), vec3(rng, 1.0e7));
    RigidBodyState::new(pose, UnifiedVelocity::new(vec3(rng, omega), vec3(rng, v)))
}
