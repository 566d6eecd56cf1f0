use clap::{Parser, Subcommand};
use rendezvous_core::apf::GuidanceMode;
use rendezvous_core::output::{write_summary_json, write_sweep_csv, write_trajectory_csv};
use rendezvous_core::scenario::Scenario;
use rendezvous_core::sim::{run, RunSummary, TrajectoryRecord};
use rendezvous_core::sweep::{expand_grid, random_initial_conditions, sweep, GridAxis, IcRanges};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit status for unreadable or invalid input.
const INPUT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "rendezvous", version, about = "6-DOF spacecraft rendezvous simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario; the exit status encodes the outcome.
    Simulate {
        scenario: PathBuf,
        /// Guidance law: conventional, physics_informed or none.
        #[arg(long)]
        mode: Option<GuidanceMode>,
        #[arg(long, env = "RENDEZVOUS_OUT_DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Run the scenario under both potential-field laws and compare.
    CompareApf {
        scenario: PathBuf,
        #[arg(long, env = "RENDEZVOUS_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Run a grid of scenario variants and write one summary row per point.
    Sweep {
        scenario: PathBuf,
        /// Swept key and values, e.g. `smc.mus1=1,2,4`. Repeat for a product grid.
        #[arg(long = "grid", value_name = "KEY=V1,V2")]
        grid: Vec<GridAxis>,
        /// Replace the grid by N seeded random initial conditions.
        #[arg(long = "random-ics", value_name = "N", conflicts_with = "grid")]
        random_ics: Option<usize>,
        #[arg(long = "ic-seed", default_value_t = 0)]
        ic_seed: u64,
        /// Worker threads; 1 runs sequentially. Defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, env = "RENDEZVOUS_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
}

type CliResult = Result<u8, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate { scenario, mode, out, seed, dt, t_end } => {
            simulate(&scenario, mode, &out, seed, dt, t_end)
        }
        Command::CompareApf { scenario, out } => compare_apf(&scenario, &out),
        Command::Sweep { scenario, grid, random_ics, ic_seed, jobs, out } => {
            run_sweep(&scenario, &grid, random_ics, ic_seed, jobs, &out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, String> {
    Scenario::load(path).map_err(|e| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_run(dir: &Path, record: &TrajectoryRecord, summary: &RunSummary) -> Result<(), String> {
    let csv_path = dir.join("trajectory.csv");
    write_trajectory_csv(create(&csv_path)?, record).map_err(|e| format!("{}: {e}", csv_path.display()))?;
    let json_path = dir.join("summary.json");
    write_summary_json(create(&json_path)?, summary).map_err(|e| format!("{}: {e}", json_path.display()))
}

fn fmt_opt(x: Option<f64>, unit: &str) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.2} {unit}"))
}

fn simulate(
    path: &Path,
    mode: Option<GuidanceMode>,
    out: &Path,
    seed: Option<u64>,
    dt: Option<f64>,
    t_end: Option<f64>,
) -> CliResult {
    let mut sc = load(path)?;
    if let Some(m) = mode {
        sc.guidance_mode = m;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(d) = dt {
        sc.dt_s = d;
    }
    if let Some(t) = t_end {
        sc.t_end_s = t;
    }
    let (record, summary) = run(&sc).map_err(|e| e.to_string())?;
    write_run(out, &record, &summary)?;
    println!(
        "{}: {} after {:.2} s ({} steps); capture {}, min obstacle distance {}",
        sc.name,
        summary.outcome,
        summary.final_time_s,
        summary.steps,
        fmt_opt(summary.capture_time_s, "s"),
        fmt_opt(summary.min_obstacle_distance_m, "m"),
    );
    if let Some(d) = &summary.diagnostic {
        println!("  {d}");
    }
    Ok(summary.outcome.exit_code() as u8)
}

fn compare_apf(path: &Path, out: &Path) -> CliResult {
    let base = load(path)?;
    let mut rows = Vec::new();
    for mode in [GuidanceMode::Conventional, GuidanceMode::PhysicsInformed] {
        let sc = Scenario { guidance_mode: mode, ..base.clone() };
        let (record, summary) = run(&sc).map_err(|e| e.to_string())?;
        write_run(&out.join(mode.to_string()), &record, &summary)?;
        rows.push(summary);
    }
    println!("{:<18} {:<10} {:>14} {:>16} {:>14}", "mode", "outcome", "capture time", "min distance", "path length");
    for s in &rows {
        println!(
            "{:<18} {:<10} {:>14} {:>16} {:>14}",
            s.guidance_mode.to_string(),
            s.outcome.to_string(),
            fmt_opt(s.capture_time_s, "s"),
            fmt_opt(s.min_obstacle_distance_m, "m"),
            format!("{:.2} m", s.path_length_m),
        );
    }
    Ok(0)
}

fn run_sweep(
    path: &Path,
    grid: &[GridAxis],
    random_ics: Option<usize>,
    ic_seed: u64,
    jobs: Option<usize>,
    out: &Path,
) -> CliResult {
    if jobs == Some(0) {
        return Err("--jobs must be at least 1".into());
    }
    let base = load(path)?;
    let points = match random_ics {
        Some(n) => random_initial_conditions(&base, n, ic_seed, IcRanges::default()),
        None => expand_grid(&base, grid),
    }
    .map_err(|e| format!("invalid grid: {e}"))?;
    let keys: Vec<String> = points.first().map(|p| p.assignments.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    let results = sweep(&points, jobs);
    let csv_path = out.join("sweep.csv");
    write_sweep_csv(create(&csv_path)?, &keys, &results).map_err(|e| format!("{}: {e}", csv_path.display()))?;
    let failed = results.iter().filter(|r| r.summary.is_err()).count();
    println!("{} points, {} failed; wrote {}", results.len(), failed, csv_path.display());
    Ok(if failed == 0 { 0 } else { INPUT_ERROR })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_and_random_ics_conflict() {
        let err = Cli::try_parse_from(["rendezvous", "sweep", "s.toml", "--grid", "seed=1", "--random-ics", "3"]).unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::ArgumentConflict);
    }

    #[test]
    fn optional_values_format_with_units() {
        assert_eq!(fmt_opt(Some(1.234), "s"), "1.23 s");
        assert_eq!(fmt_opt(None, "m"), "-");
    }
}
