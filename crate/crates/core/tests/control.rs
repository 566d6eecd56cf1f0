mod common;

use common::*;
use nalgebra::{Matrix3, Vector3, Vector6};
use proptest::prelude::*;
use rendezvous_core::apf::GuidanceMode;
use rendezvous_core::dynamics::BodyParams;
use rendezvous_core::scenario::Scenario;
use rendezvous_core::sim::{run, TrajectoryRecord};
use rendezvous_core::smc::{lyapunov_diagnostics, reaching_law, settling_time_bound, sig, SmcGains, SurfaceVariant};

fn unguided(name: &str) -> Scenario {
    let mut sc = scenario(name);
    sc.guidance_mode = GuidanceMode::None;
    sc.obstacles.clear();
    sc
}

fn rollout(sc: &Scenario) -> TrajectoryRecord {
    run(sc).unwrap().0
}

proptest! {
    #[test]
    fn lyapunov_value_is_nonnegative_and_bound_nonpositive(
        s in prop::array::uniform6(-5.0..5.0f64),
        m in 1.0..500.0f64,
        j in prop::array::uniform3(1.0..50.0f64),
    ) {
        prop_assume!(j[0] + j[1] > j[2] && j[0] + j[2] > j[1] && j[1] + j[2] > j[0]);
        let p = BodyParams::new(m, Matrix3::from_diagonal(&Vector3::from(j))).unwrap().generalized_inertia();
        let gains = scenario("free_flight").smc;
        let (v1, bound) = lyapunov_diagnostics(&Vector6::from(s), &p, &gains);
        prop_assert!(v1 >= 0.0);
        prop_assert!(bound <= 0.0);
    }

    #[test]
    fn sig_is_odd_and_sign_preserving(x in prop::array::uniform6(-10.0..10.0f64), a in 0.1..3.0f64) {
        let x = Vector6::from(x);
        prop_assert_eq!(sig(&(-x), a), -sig(&x, a));
        for (xi, yi) in x.iter().zip(sig(&x, a).iter()) {
            prop_assert!(xi * yi >= 0.0);
        }
    }

    #[test]
    fn reaching_law_opposes_the_surface(s in prop::array::uniform6(-2.0..2.0f64)) {
        let gains = scenario("free_flight").smc;
        let s = Vector6::from(s);
        prop_assert!(s.dot(&reaching_law(&s, &gains)) <= 0.0);
    }
}

#[test]
fn lyapunov_function_decreases_outside_the_boundary_layer() {
    for name in ["free_flight", "paper_molniya"] {
        let sc = unguided(name);
        let rows = rollout(&sc).rows;
        let mut checked = 0;
        for w in rows.windows(2) {
            if w[0].s.amax() > sc.smc.boundary_layer {
                assert!(w[1].v1 < w[0].v1, "{name}: V1 rose at t = {}", w[0].t);
                checked += 1;
            }
        }
        assert!(checked > 100, "{name}: only {checked} samples outside the layer");
    }
}

/// `P ṡ` from central differences along a rollout follows the reaching law
/// in every component outside the boundary layer. Components inside it can
/// sit at a fixed point of the RK4 stages, since `sig^{l₁}` with `l₁ < 1` is
/// not Lipschitz at zero.
#[test]
fn closed_loop_surface_follows_the_reaching_law() {
    let sc = unguided("free_flight");
    let p = sc.follower.params().unwrap().generalized_inertia();
    let rows = rollout(&sc).rows;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 1..rows.len() - 1 {
        let s = rows[k].s;
        let s_dot = (rows[k + 1].s - rows[k - 1].s) / (rows[k + 1].t - rows[k - 1].t);
        let err = p.matrix() * s_dot - reaching_law(&s, &sc.smc);
        for i in (0..6).filter(|&i| s[i].abs() > sc.smc.boundary_layer) {
            worst = worst.max(err[i].abs());
            checked += 1;
        }
    }
    assert!(checked > 1000);
    assert!(worst < 1e-4, "worst mismatch {worst}");
}

#[test]
fn both_surface_variants_settle_within_the_bound() {
    for variant in [SurfaceVariant::RhoRho, SurfaceVariant::RhoXi] {
        let mut sc = unguided("free_flight");
        sc.smc.surface_variant = variant;
        sc.terminate_on_capture = false;
        let (_, summary) = run(&sc).unwrap();
        let reach = summary.reaching_time_s.expect("reached the surface");
        assert!(reach <= summary.tmax_s.unwrap(), "{variant:?}: {reach}");
        assert!(summary.steady_state.max_abs_b_m < 1e-3, "{variant:?}");
    }
}

#[test]
fn far_initial_conditions_still_reach_in_fixed_time() {
    let mut sc = unguided("free_flight");
    sc.terminate_on_capture = false;
    let gains: SmcGains = sc.smc;
    let tmax = settling_time_bound(&gains, &sc.follower.params().unwrap().generalized_inertia()).unwrap().tmax;
    sc.t_end_s = (tmax / sc.dt_s).ceil() * sc.dt_s;
    for (b, v) in [([200.0, -150.0, 80.0], [0.5, 0.5, -0.5]), ([-5.0, 0.0, 0.0], [-1.0, 0.0, 0.0])] {
        sc.initial.b_m = b;
        sc.initial.v_mps = v;
        let (_, summary) = run(&sc).unwrap();
        let t = summary.reaching_time_s.expect("reached the surface");
        assert!(t <= tmax, "b = {b:?}: {t} > {tmax}");
    }
}
