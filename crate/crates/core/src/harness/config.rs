//! JSON experiment files.
//!
//! ```json
//! {
//!   "nodes": ["A", "B", "C", "D", "E", "F"],
//!   "edges": [["A", "B", 1.0], ["B", "C", "1 MHz"]],
//!   "routes": [["A", "B", "C", "D", "E"], ["B", "C", "D", "E", "F"]],
//!   "users": [["A", "E", 0.2], ["B", "F", "200 kHz"]],
//!   "eta": 0.9,
//!   "dt": "1 us",
//!   "policy": "global_mw",
//!   "gamma": 1,
//!   "steps": 10000,
//!   "seed": 1,
//!   "sweep": {
//!     "axes": [["A", "E"], ["B", "F"]],
//!     "beta1": {"min": 0, "max": 0.9, "count": 11},
//!     "beta2": {"min": 0, "max": 0.9, "count": 11},
//!     "base_seed": 1,
//!     "replications": 1
//!   }
//! }
//! ```
//!
//! Rates are per time step when given as numbers. Strings with a frequency
//! unit (`Hz`, `kHz`, `MHz`, `GHz`) are converted with `dt`. Durations are
//! seconds as numbers or strings with `s`, `ms`, `us`, `µs`, `ns`. Memory
//! is either `eta` directly or `tau` together with `dt`.

use std::path::Path;

use serde::Deserialize;

use super::sweep::{GridAxis, SweepSpec};
use super::{SimConfig, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::ilp::SolverOptions;
use crate::policies::{PolicyConfig, PolicyKind};
use crate::topology::{EdgeSpec, MemoryModel, NetworkSpec, UserSpec};

/// A parsed config file: the base run and an optional sweep over it.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub sim: SimConfig,
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    nodes: Vec<String>,
    edges: Vec<(String, String, Quantity)>,
    routes: Vec<Vec<String>>,
    #[serde(default)]
    users: Vec<(String, String, Quantity)>,
    eta: Option<f64>,
    tau: Option<Quantity>,
    dt: Option<Quantity>,
    #[serde(default = "default_policy")]
    policy: PolicyKind,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default = "default_steps")]
    steps: u64,
    #[serde(default)]
    seed: u64,
    node_budget: Option<usize>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    min: Quantity,
    max: Quantity,
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axes: [(String, String); 2],
    beta1: RawAxis,
    beta2: RawAxis,
    base_seed: Option<u64>,
    #[serde(default = "default_replications")]
    replications: usize,
}

fn default_policy() -> PolicyKind {
    PolicyKind::GlobalMw
}

fn default_gamma() -> f64 {
    1.0
}

fn default_steps() -> u64 {
    DEFAULT_STEPS
}

fn default_replications() -> usize {
    1
}

fn split_unit(text: &str) -> Result<(f64, &str)> {
    let text = text.trim();
    let cut = text.find(|c: char| c.is_alphabetic() || c == 'µ').unwrap_or(text.len());
    let (num, unit) = text.split_at(cut);
    let value = num
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("cannot parse quantity `{text}`")))?;
    Ok((value, unit.trim()))
}

/// Duration in seconds from `"1 us"`-style text.
pub fn parse_duration(text: &str) -> Result<f64> {
    let (v, unit) = split_unit(text)?;
    let scale = match unit {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" | "µs" => 1e-6,
        "ns" => 1e-9,
        other => return Err(Error::Config(format!("unknown time unit `{other}`"))),
    };
    Ok(v * scale)
}

/// Rate per step from `"300 kHz"`-style text; unitless text is per step.
pub fn parse_rate(text: &str, dt_secs: Option<f64>) -> Result<f64> {
    let (v, unit) = split_unit(text)?;
    let hz = match unit {
        "" => return Ok(v),
        "Hz" => 1.0,
        "kHz" => 1e3,
        "MHz" => 1e6,
        "GHz" => 1e9,
        other => return Err(Error::Config(format!("unknown rate unit `{other}`"))),
    };
    let dt =
        dt_secs.ok_or_else(|| Error::Config(format!("rate `{text}` has a frequency unit but no `dt` is given")))?;
    Ok(v * hz * dt)
}

impl Quantity {
    fn rate(&self, dt: Option<f64>) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => parse_rate(t, dt),
        }
    }

    fn seconds(&self) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => parse_duration(t),
        }
    }
}

pub fn parse_config(text: &str) -> Result<Experiment> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let dt = raw.dt.as_ref().map(Quantity::seconds).transpose()?;
    let memory = match (raw.eta, &raw.tau) {
        (Some(_), Some(_)) => return Err(Error::Config("give either `eta` or `tau`, not both".into())),
        (Some(eta), None) => MemoryModel::Efficiency(eta),
        (None, Some(tau)) => MemoryModel::Lifetime {
            tau: tau.seconds()?,
            dt: dt.ok_or_else(|| Error::Config("`tau` requires `dt`".into()))?,
        },
        (None, None) => return Err(Error::Config("missing `eta` (or `tau` and `dt`)".into())),
    };

    let edges = raw
        .edges
        .iter()
        .map(|(a, b, q)| {
            Ok(EdgeSpec {
                a: a.clone(),
                b: b.clone(),
                alpha: q.rate(dt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let users = raw
        .users
        .iter()
        .map(|(a, b, q)| {
            Ok(UserSpec {
                a: a.clone(),
                b: b.clone(),
                beta: q.rate(dt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = NetworkSpec {
        nodes: raw.nodes,
        edges,
        routes: raw.routes,
        users,
        memory,
    };

    let mut solver = SolverOptions::default();
    if let Some(budget) = raw.node_budget {
        solver.node_budget = budget;
    }
    let sim = SimConfig {
        spec,
        policy: PolicyConfig {
            kind: raw.policy,
            gamma: raw.gamma,
        },
        steps: raw.steps,
        seed: raw.seed,
        solver,
    };
    sim.validate()?;

    let sweep = raw
        .sweep
        .map(|s| -> Result<SweepSpec> {
            let axis = |a: &RawAxis| -> Result<GridAxis> {
                Ok(GridAxis {
                    min: a.min.rate(dt)?,
                    max: a.max.rate(dt)?,
                    count: a.count,
                })
            };
            Ok(SweepSpec {
                axes: s.axes.clone(),
                beta1: axis(&s.beta1)?,
                beta2: axis(&s.beta2)?,
                base_seed: s.base_seed.unwrap_or(raw.seed),
                replications: s.replications,
            })
        })
        .transpose()?;
    if let Some(s) = &sweep {
        s.validate(&sim.spec)?;
    }
    Ok(Experiment { sim, sweep })
}

pub fn load_config(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
