//! Parameter sweeps. Every grid point is an independent run, so points are
//! mapped in parallel (feature `parallel`) and collected in grid order.

use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{run, RunSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

/// One swept key, e.g. `smc.mu1=0.01,0.02` or `initial.b_m[0]=10,20`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

fn parse_value(s: &str) -> toml::Value {
    #[derive(serde::Deserialize)]
    struct Wrap {
        v: toml::Value,
    }
    toml::from_str::<Wrap>(&format!("v = {s}")).map_or_else(|_| toml::Value::String(s.to_string()), |w| w.v)
}

impl FromStr for GridAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (key, values) = s.split_once('=').ok_or_else(|| format!("grid axis `{s}` must look like key=v1,v2"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(format!("grid axis `{s}` has an empty key"));
        }
        let values: Vec<_> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(parse_value).collect();
        if values.is_empty() {
            return Err(format!("grid axis `{key}` has no values"));
        }
        Ok(GridAxis { key: key.to_string(), values })
    }
}

/// Set `key` (dotted path with optional `[i]` indices) inside a TOML tree.
/// Table keys may be created only where the parent table already exists.
pub fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), String> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let last_part = depth + 1 == parts.len();
        let (name, indices) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (*part, ""),
        };
        let idx: Vec<usize> = indices
            .split(['[', ']'])
            .filter(|x| !x.is_empty())
            .map(|x| x.parse().map_err(|_| format!("bad index in `{key}`")))
            .collect::<Result<_, _>>()?;
        let table = node.as_table_mut().ok_or_else(|| format!("`{key}`: `{name}` is not inside a table"))?;
        if last_part && idx.is_empty() {
            table.insert(name.to_string(), value);
            return Ok(());
        }
        node = table.get_mut(name).ok_or_else(|| format!("unknown key `{name}` in `{key}`"))?;
        for (j, i) in idx.iter().enumerate() {
            let arr = node.as_array_mut().ok_or_else(|| format!("`{key}`: `{name}` is not an array"))?;
            let len = arr.len();
            node = arr.get_mut(*i).ok_or_else(|| format!("`{key}`: index {i} out of range ({len})"))?;
            if last_part && j + 1 == idx.len() {
                *node = value;
                return Ok(());
            }
        }
    }
    Err(format!("empty key `{key}`"))
}

/// A fully specified run in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, toml::Value)>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub index: usize,
    pub point: Vec<(String, toml::Value)>,
    pub summary: Result<RunSummary, String>,
}

fn apply(base: &Scenario, assignments: &[(String, toml::Value)]) -> Result<Scenario, ScenarioError> {
    let mut tree = base.to_toml_value();
    for (k, v) in assignments {
        set_path(&mut tree, k, v.clone()).map_err(ScenarioError::Invalid)?;
    }
    Scenario::from_toml_value(tree)
}

/// Cartesian product of the axes, last axis fastest. An assignment that
/// does not fit the scenario schema rejects the whole grid.
pub fn expand_grid(base: &Scenario, axes: &[GridAxis]) -> Result<Vec<SweepPoint>, ScenarioError> {
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut assignments = vec![(String::new(), toml::Value::Boolean(false)); axes.len()];
        for (slot, axis) in assignments.iter_mut().zip(axes).rev() {
            let n = axis.values.len();
            *slot = (axis.key.clone(), axis.values[rem % n].clone());
            rem /= n;
        }
        let scenario = apply(base, &assignments)?;
        points.push(SweepPoint { index, assignments, scenario });
    }
    Ok(points)
}

/// Bounds for random relative initial conditions, per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcRanges {
    pub gamma_rad: f64,
    pub b_m: f64,
    pub omega_radps: f64,
    pub v_mps: f64,
}

impl Default for IcRanges {
    fn default() -> Self {
        IcRanges { gamma_rad: 0.5, b_m: 20.0, omega_radps: 0.01, v_mps: 0.1 }
    }
}

/// `n` seeded random initial conditions on top of `base`.
pub fn random_initial_conditions(
    base: &Scenario,
    n: usize,
    seed: u64,
    ranges: IcRanges,
) -> Result<Vec<SweepPoint>, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |m: f64| -> toml::Value {
        let v: Vec<toml::Value> = (0..3).map(|_| toml::Value::Float(rng.random_range(-m..=m))).collect();
        toml::Value::Array(v)
    };
    (0..n)
        .map(|index| {
            let assignments = vec![
                ("initial.gamma_rad".to_string(), draw(ranges.gamma_rad)),
                ("initial.b_m".to_string(), draw(ranges.b_m)),
                ("initial.omega_radps".to_string(), draw(ranges.omega_radps)),
                ("initial.v_mps".to_string(), draw(ranges.v_mps)),
            ];
            let scenario = apply(base, &assignments)?;
            Ok(SweepPoint { index, assignments, scenario })
        })
        .collect()
}

fn run_point(p: &SweepPoint) -> SweepResult {
    SweepResult {
        index: p.index,
        point: p.assignments.clone(),
        summary: run(&p.scenario).map(|(_, s)| s).map_err(|e| e.to_string()),
    }
}

pub fn sweep_sequential(points: &[SweepPoint]) -> Vec<SweepResult> {
    points.iter().map(run_point).collect()
}

/// Run every point; `jobs = Some(1)` or a build without `parallel` runs
/// sequentially, `None` uses all cores.
#[cfg(feature = "parallel")]
pub fn sweep(points: &[SweepPoint], jobs: Option<usize>) -> Vec<SweepResult> {
    use rayon::prelude::*;
    if jobs == Some(1) {
        return sweep_sequential(points);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build();
    match pool {
        Ok(pool) => pool.install(|| points.par_iter().map(run_point).collect()),
        Err(_) => sweep_sequential(points),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn sweep(points: &[SweepPoint], _jobs: Option<usize>) -> Vec<SweepResult> {
    sweep_sequential(points)
}
