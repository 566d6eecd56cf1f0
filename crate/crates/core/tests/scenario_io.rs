mod common;

use common::*;
use proptest::prelude::*;
use rendezvous_core::apf::GuidanceMode;
use rendezvous_core::output::{trajectory_header, write_summary_json, write_sweep_csv, write_trajectory_csv};
use rendezvous_core::scenario::{ObstacleMotion, Scenario, ScenarioError};
use rendezvous_core::sim::{run, Outcome};
use rendezvous_core::sweep::{expand_grid, random_initial_conditions, sweep, GridAxis, IcRanges};

const SHIPPED: [&str; 3] = ["free_flight", "trap_collinear", "paper_molniya"];

fn short(name: &str, t_end: f64) -> Scenario {
    let mut sc = scenario(name);
    sc.t_end_s = t_end;
    sc
}

#[test]
fn shipped_scenarios_load_and_normalize() {
    for name in SHIPPED {
        let sc = scenario(name);
        assert_eq!(sc.name, name);
        let text = sc.to_toml_string();
        let again = Scenario::from_toml_str(&text, "normalized").unwrap();
        assert_eq!(again, sc);
        assert_eq!(again.to_toml_string(), text);
    }
}

#[test]
fn errors_name_the_file_and_line() {
    let src = std::fs::read_to_string(scenario_path("free_flight")).unwrap();
    let line = src.lines().position(|l| l.starts_with("[smc]")).unwrap() + 2;
    let mut lines: Vec<&str> = src.lines().collect();
    lines.insert(line - 1, "mu_typo = 1.0");
    let err = Scenario::from_toml_str(&lines.join("\n"), "ff.toml").unwrap_err();
    match &err {
        ScenarioError::Parse { origin, line: l, .. } => {
            assert_eq!(origin, "ff.toml");
            assert_eq!(*l, line);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("mu_typo"), "{err}");

    let missing = Scenario::load(std::path::Path::new("/no/such/scenario.toml")).unwrap_err();
    assert!(missing.to_string().contains("/no/such/scenario.toml"));
}

#[test]
fn invalid_values_are_rejected_on_load() {
    let base = scenario("trap_collinear").to_toml_string();
    let cases = [
        ("eccentricity = 0.72", "eccentricity = 1.2"),
        ("dt_s = 0.05", "dt_s = 0.0"),
        ("t_end_s = 600.0", "t_end_s = 0.01"),
        ("influence_radius_m = 5.0", "influence_radius_m = 0.5"),
        ("mu_r = 24.0", "mu_r = -1.0"),
        ("l1 = 0.5", "l1 = 1.5"),
        ("mass_kg = 110.0", "mass_kg = 0.0"),
        ("guidance_mode = \"physics_informed\"", "guidance_mode = \"vortex\""),
    ];
    for (from, to) in cases {
        assert!(base.contains(from), "{from}");
        let src = base.replacen(from, to, 1);
        assert!(Scenario::from_toml_str(&src, "case").is_err(), "{to} accepted");
    }
}

#[test]
fn trajectory_csv_is_rectangular_and_lossless() {
    let sc = short("paper_molniya", 5.0);
    let (rec, _) = run(&sc).unwrap();
    let mut bytes = Vec::new();
    write_trajectory_csv(&mut bytes, &rec).unwrap();
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, trajectory_header(3));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), rec.rows.len());
    assert_eq!(rows.len(), 101);
    for (k, (r, orig)) in rows.iter().zip(&rec.rows).enumerate() {
        assert_eq!(r.len(), header.len());
        let t: f64 = r[0].parse().unwrap();
        assert_eq!(t, k as f64 * sc.dt_s);
        let v1: f64 = r[r.len() - 1].parse().unwrap();
        assert_eq!(v1.to_bits(), orig.v1.to_bits());
        let s1: f64 = r[header.iter().position(|h| h == "s_1").unwrap()].parse().unwrap();
        assert_eq!(s1.to_bits(), orig.s[0].to_bits());
        assert!(r.iter().all(|f| f.parse::<f64>().unwrap().is_finite()));
    }
}

#[test]
fn summary_json_carries_outcome_and_bounds() {
    let (_, summary) = run(&scenario("paper_molniya")).unwrap();
    let mut bytes = Vec::new();
    write_summary_json(&mut bytes, &summary).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["outcome"], "captured");
    assert_eq!(v["guidance_mode"], "physics_informed");
    for key in ["capture_time_s", "min_obstacle_distance_m", "reaching_time_s", "tmax_s", "steady_state"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["steady_state"]["max_abs_b_m"].as_f64().unwrap() < 0.1);
}

#[test]
fn outcomes_agree_with_event_thresholds() {
    for name in SHIPPED {
        for mode in [GuidanceMode::Conventional, GuidanceMode::PhysicsInformed] {
            let sc = Scenario { guidance_mode: mode, ..scenario(name) };
            let (rec, s) = run(&sc).unwrap();
            let last = rec.rows.last().unwrap();
            match s.outcome {
                Outcome::Captured => {
                    let t = s.capture_time_s.unwrap();
                    let row = rec.rows.iter().find(|r| r.t == t).unwrap();
                    assert!(row.rel_position.norm() < sc.events.capture_eps_m);
                    assert!(row.xi_rel.norm() < sc.events.vel_eps_mps);
                    assert!(rec.rows.iter().filter(|r| r.t < t).all(|r| {
                        r.rel_position.norm() >= sc.events.capture_eps_m || r.xi_rel.norm() >= sc.events.vel_eps_mps
                    }));
                }
                Outcome::Stalled => {
                    let report = s.stall.as_ref().unwrap();
                    assert!(report.mean_speed < sc.events.stall.speed_eps_mps);
                    assert!(report.max_net_force < sc.events.stall.force_eps_n);
                    assert!(last.rel_position.norm() > sc.events.stall.goal_eps_m);
                }
                other => panic!("{name}/{mode}: unexpected {other}"),
            }
            let min = rec.rows.iter().flat_map(|r| r.distances.iter().copied()).fold(f64::INFINITY, f64::min);
            let hard = sc.obstacles.iter().map(|o| o.hard_radius_m).fold(0.0, f64::max);
            assert!(sc.obstacles.is_empty() || min > hard);
        }
    }
}

#[test]
fn conventional_trap_stalls_and_physics_informed_escapes() {
    let base = scenario("trap_collinear");
    let conv = run(&Scenario { guidance_mode: GuidanceMode::Conventional, ..base.clone() }).unwrap().1;
    assert_eq!(conv.outcome, Outcome::Stalled);
    assert!(conv.terminal_speed_mps < 1e-3);
    assert!(conv.final_distance_m > 5.0);
    let pi = run(&base).unwrap().1;
    assert_eq!(pi.outcome, Outcome::Captured);
    assert!(pi.min_obstacle_distance_m.unwrap() > 1.0);
}

#[test]
fn two_body_obstacles_stay_close_to_the_linear_model_briefly() {
    let mut linear = short("paper_molniya", 20.0);
    linear.guidance_mode = GuidanceMode::None;
    let mut orbital = linear.clone();
    for o in &mut orbital.obstacles {
        o.motion = ObstacleMotion::TwoBody;
    }
    let (a, _) = run(&linear).unwrap();
    let (b, _) = run(&orbital).unwrap();
    // the orbital track goes through inertial coordinates, ~1e7 m
    for (da, db) in a.rows[0].distances.iter().zip(&b.rows[0].distances) {
        assert!((da - db).abs() < 1e-6);
    }
    let (ra, rb) = (a.rows.last().unwrap(), b.rows.last().unwrap());
    for (da, db) in ra.distances.iter().zip(&rb.distances) {
        assert!((da - db).abs() < 5.0, "{da} vs {db}");
        assert!(da != db);
    }
}

#[test]
fn runs_are_reproducible_to_the_byte() {
    for name in SHIPPED {
        let sc = short(name, 30.0);
        let bytes = || {
            let (rec, _) = run(&sc).unwrap();
            let mut out = Vec::new();
            write_trajectory_csv(&mut out, &rec).unwrap();
            out
        };
        assert_eq!(bytes(), bytes(), "{name}");
    }
    let a = run(&short("paper_molniya", 10.0)).unwrap().0;
    let mut reseeded = short("paper_molniya", 10.0);
    reseeded.seed += 1;
    let b = run(&reseeded).unwrap().0;
    assert_ne!(a.rows.last().unwrap().s, b.rows.last().unwrap().s);
}

#[test]
fn sweep_output_does_not_depend_on_jobs() {
    let base = short("free_flight", 30.0);
    let axes: Vec<GridAxis> = vec!["smc.mu1=0.02,0.05".parse().unwrap(), "initial.b_m[0]=10.0,20.0,30.0".parse().unwrap()];
    let points = expand_grid(&base, &axes).unwrap();
    let keys: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    let csv_for = |jobs| {
        let mut out = Vec::new();
        write_sweep_csv(&mut out, &keys, &sweep(&points, jobs)).unwrap();
        String::from_utf8(out).unwrap()
    };
    let one = csv_for(Some(1));
    assert_eq!(one.lines().count(), 7);
    assert!(one.lines().nth(1).unwrap().starts_with("0,0.02,10.0,"));
    for jobs in [Some(2), Some(3), None] {
        assert_eq!(csv_for(jobs), one);
    }

    let ics = random_initial_conditions(&base, 4, 3, IcRanges::default()).unwrap();
    assert_eq!(sweep(&ics, Some(1)), sweep(&ics, Some(4)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_expansion_covers_the_product(n1 in 1usize..4, n2 in 1usize..4) {
        let base = short("free_flight", 1.0);
        let a: GridAxis = format!("smc.mus1={}", (1..=n1).map(|i| format!("{i}.0")).collect::<Vec<_>>().join(",")).parse().unwrap();
        let b: GridAxis = format!("seed={}", (0..n2).map(|i| i.to_string()).collect::<Vec<_>>().join(",")).parse().unwrap();
        let pts = expand_grid(&base, &[a, b]).unwrap();
        prop_assert_eq!(pts.len(), n1 * n2);
        for (i, p) in pts.iter().enumerate() {
            prop_assert_eq!(p.index, i);
            prop_assert_eq!(p.scenario.smc.mus1, (i / n2 + 1) as f64);
            prop_assert_eq!(p.scenario.seed, (i % n2) as u64);
        }
    }
}
