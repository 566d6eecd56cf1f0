//! CSV and JSON writers. Floats in the trajectory CSV carry 17 significant
//! digits so every value parses back to the same `f64`.

use crate::sim::{RunSummary, TrajectoryRecord};
use crate::sweep::SweepResult;
use std::io::Write;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_header(obstacles: usize) -> Vec<String> {
    let mut h = vec!["t_s".to_string()];
    for body in ["target", "follower"] {
        for r in 1..=3 {
            for c in 1..=3 {
                h.push(format!("{body}_c{r}{c}"));
            }
        }
        for axis in ["x", "y", "z"] {
            h.push(format!("{body}_{axis}_m"));
        }
    }
    let triple = |prefix: &str, unit: &str| ["x", "y", "z"].map(|a| format!("{prefix}_{a}_{unit}"));
    h.extend(triple("rho_gamma", "rad"));
    h.extend(triple("rho_b", "m"));
    h.extend(triple("xi_omega", "radps"));
    h.extend(triple("xi_v", "mps"));
    h.extend((1..=6).map(|i| format!("s_{i}")));
    for w in ["phi_c", "phi_apf"] {
        h.extend(triple(&format!("{w}_torque"), "nm"));
        h.extend(triple(&format!("{w}_force"), "n"));
    }
    h.extend((0..obstacles).map(|i| format!("obstacle_{i}_distance_m")));
    h.push("v1".into());
    h
}

pub fn write_trajectory_csv<W: Write>(w: W, record: &TrajectoryRecord) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trajectory_header(record.obstacle_count))?;
    let mut fields: Vec<String> = Vec::new();
    for row in &record.rows {
        fields.clear();
        fields.push(format_float(row.t));
        for pose in [&row.target, &row.follower] {
            let c = pose.rotation.matrix();
            for r in 0..3 {
                for k in 0..3 {
                    fields.push(format_float(c[(r, k)]));
                }
            }
            fields.extend(pose.position.iter().map(|x| format_float(*x)));
        }
        for v in [&row.rho, &row.xi_rel, &row.s, &row.phi_c, &row.phi_apf] {
            fields.extend(v.iter().map(|x| format_float(*x)));
        }
        // a collision row may lack distances for obstacles after the first hit
        for i in 0..record.obstacle_count {
            fields.push(row.distances.get(i).map_or_else(|| "nan".into(), |d| format_float(*d)));
        }
        fields.push(format_float(row.v1));
        out.write_record(&fields)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(w: W, summary: &RunSummary) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(w, summary)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, format_float)
}

pub fn sweep_header(keys: &[String]) -> Vec<String> {
    let mut h = vec!["index".to_string()];
    h.extend(keys.iter().cloned());
    h.extend(
        [
            "outcome",
            "capture_time_s",
            "reaching_time_s",
            "tmax_s",
            "max_s_after_reaching",
            "min_obstacle_distance_m",
            "path_length_m",
            "final_distance_m",
            "terminal_speed_mps",
            "max_abs_b_m",
            "max_abs_gamma_rad",
            "max_abs_v_mps",
            "max_abs_omega_radps",
            "error",
        ]
        .map(String::from),
    );
    h
}

/// One row per grid point, in grid order.
pub fn write_sweep_csv<W: Write>(w: W, keys: &[String], results: &[SweepResult]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(sweep_header(keys))?;
    for r in results {
        let mut f = vec![r.index.to_string()];
        f.extend(r.point.iter().map(|(_, v)| match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        }));
        match &r.summary {
            Ok(s) => {
                f.push(s.outcome.to_string());
                f.extend([s.capture_time_s, s.reaching_time_s, s.tmax_s, s.max_s_after_reaching].map(opt));
                f.push(opt(s.min_obstacle_distance_m));
                let ss = &s.steady_state;
                f.extend(
                    [
                        s.path_length_m,
                        s.final_distance_m,
                        s.terminal_speed_mps,
                        ss.max_abs_b_m,
                        ss.max_abs_gamma_rad,
                        ss.max_abs_v_mps,
                        ss.max_abs_omega_radps,
                    ]
                    .map(format_float),
                );
                f.push(String::new());
            }
            Err(e) => {
                f.push("error".into());
                f.extend(std::iter::repeat_n(String::new(), 12));
                f.push(e.clone());
            }
        }
        out.write_record(&f)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_width() {
        assert_eq!(trajectory_header(0).len(), 1 + 24 + 6 * 5 + 1);
        assert_eq!(trajectory_header(3).len(), 59);
        assert_eq!(sweep_header(&["smc.mu1".into()]).len(), 16);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
    }

    proptest! {
        #[test]
        fn floats_roundtrip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
