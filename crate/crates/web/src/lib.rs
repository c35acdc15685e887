//! Browser bindings for the scheduling simulator.
//!
//! Every export takes a network config in the CLI's JSON format and returns
//! JSON text. The plain functions hold the logic so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use qsched::harness::{parse_config, run_simulation, run_sweep, Experiment, GridAxis, Metric, SweepSpec};
use qsched::topology::build_transition_system;
use qsched::PolicyKind;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest sweep grid the page may request, per axis.
pub const MAX_GRID: usize = 12;

#[derive(Serialize)]
struct QueueView {
    label: String,
    physical: bool,
    rank: u32,
}

#[derive(Serialize)]
struct MatrixView {
    queues: Vec<QueueView>,
    variables: Vec<String>,
    m_tilde: Vec<Vec<i32>>,
    n_tilde: Vec<Vec<i32>>,
}

#[derive(Serialize)]
struct GridView {
    axes: [String; 2],
    beta1: Vec<f64>,
    beta2: Vec<f64>,
    /// Row-major over `beta1`, worst unserved fraction of the two pairs.
    values: Vec<Vec<f64>>,
    failures: usize,
}

fn load(config: &str, policy: Option<&str>) -> Result<Experiment, String> {
    let mut exp = parse_config(config).map_err(|e| e.to_string())?;
    if let Some(p) = policy.filter(|p| !p.is_empty()) {
        exp.sim.policy.kind = p.parse::<PolicyKind>().map_err(|e| e.to_string())?;
    }
    Ok(exp)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Queues, swap variables and the two incidence matrices.
pub fn matrix_json(config: &str) -> Result<String, String> {
    let exp = load(config, None)?;
    let ts = build_transition_system(&exp.sim.spec).map_err(|e| e.to_string())?;
    let rows = |m: &qsched::topology::IntMatrix| (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
    to_json(&MatrixView {
        queues: (0..ts.n_queues())
            .map(|q| QueueView {
                label: ts.queue_label(q),
                physical: ts.queues()[q].physical,
                rank: ts.queues()[q].rank,
            })
            .collect(),
        variables: (0..ts.dim()).map(|v| ts.variable_label(v)).collect(),
        m_tilde: rows(ts.m_tilde()),
        n_tilde: rows(ts.n_tilde()),
    })
}

/// One run; `policy` may be empty to keep the config's choice.
pub fn simulate_json(config: &str, policy: &str, steps: u32, seed: u32) -> Result<String, String> {
    let mut exp = load(config, Some(policy))?;
    exp.sim.steps = u64::from(steps);
    exp.sim.seed = u64::from(seed);
    let report = run_simulation(&exp.sim).map_err(|e| e.to_string())?;
    to_json(&report)
}

/// Square sweep over `[0, max]` on the config's sweep axes, or on its first
/// two user pairs when it has no sweep section.
pub fn sweep_json(config: &str, policy: &str, count: u32, max: f64, steps: u32) -> Result<String, String> {
    let count = count as usize;
    if !(1..=MAX_GRID).contains(&count) {
        return Err(format!("grid size must be 1..={MAX_GRID}, got {count}"));
    }
    let mut exp = load(config, Some(policy))?;
    exp.sim.steps = u64::from(steps);
    let axes: [(String, String); 2] = match &exp.sweep {
        Some(s) => s.axes.clone(),
        None => match exp.sim.spec.users.as_slice() {
            [u1, u2, ..] => [(u1.a.clone(), u1.b.clone()), (u2.a.clone(), u2.b.clone())],
            _ => return Err("a sweep needs two user pairs".into()),
        },
    };
    let axis = GridAxis::new(0.0, max, count);
    let sweep = SweepSpec::new(
        [(&axes[0].0, &axes[0].1), (&axes[1].0, &axes[1].1)],
        axis,
        axis,
        exp.sim.seed,
    );
    let result = run_sweep(&sweep, &exp.sim, Some(1)).map_err(|e| e.to_string())?;
    let grid = result.grid(Metric::Max);
    let (n1, n2) = grid.shape();
    to_json(&GridView {
        axes: axes.map(|(a, b)| format!("{a}{b}")),
        values: (0..n1).map(|i1| (0..n2).map(|i2| grid.get(i1, i2)).collect()).collect(),
        beta1: grid.beta1,
        beta2: grid.beta2,
        failures: result.failures.len(),
    })
}

#[wasm_bindgen(js_name = transitionMatrix)]
pub fn transition_matrix(config: &str) -> Result<String, JsError> {
    matrix_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(config: &str, policy: &str, steps: u32, seed: u32) -> Result<String, JsError> {
    simulate_json(config, policy, steps, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sweepGrid)]
pub fn sweep_grid(config: &str, policy: &str, count: u32, max: f64, steps: u32) -> Result<String, JsError> {
    sweep_json(config, policy, count, max, steps).map_err(|e| JsError::new(&e))
}
