//! Experiment driver: configuration files, single runs, rate-region sweeps
//! and their CSV / heatmap output.

mod config;
mod output;
pub mod region;
mod sweep;

use std::io::Write;

use serde::Serialize;

pub use config::{load_config, parse_config, parse_duration, parse_rate, Experiment};
pub use output::{heatmap_image, read_csv, render_heatmap, write_csv, HeatmapOptions, CSV_HEADER};
pub use sweep::{
    capacity_bound, point_seed, run_sweep, GridAxis, Metric, RateGrid, SweepFailure, SweepRecord, SweepResult,
    SweepSpec,
};

use crate::dynamics::{advance, observe_step, Decision, NetworkState, StepObservation, TraceWriter};
use crate::error::{Error, Result};
use crate::ilp::SolverOptions;
use crate::policies::{PolicyConfig, PolicyKind, Scheduler};
use crate::stochastic::RandomSource;
use crate::topology::{build_transition_system, NetworkSpec, TransitionSystem};

/// Steps per run unless the config says otherwise.
pub const DEFAULT_STEPS: u64 = 10_000;
/// Step count of the full-scale reproduction.
pub const FULL_SCALE_STEPS: u64 = 100_000;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub spec: NetworkSpec,
    pub policy: PolicyConfig,
    pub steps: u64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl SimConfig {
    pub fn new(spec: NetworkSpec, kind: PolicyKind) -> Self {
        SimConfig {
            spec,
            policy: PolicyConfig::new(kind),
            steps: DEFAULT_STEPS,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        self.policy.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub a: String,
    pub b: String,
    pub arrived: u64,
    pub served: u64,
    /// `1 - served / arrived`, zero when nothing arrived.
    pub unserved_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueueMean {
    pub queue: String,
    pub ebits: f64,
    pub demands: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub policy: PolicyKind,
    pub steps: u64,
    pub seed: u64,
    pub pairs: Vec<PairReport>,
    pub final_q_total: u64,
    pub final_d_total: u64,
    pub generated_ebits: u64,
    pub lost_ebits: u64,
    pub consumed_ebits: u64,
    pub swaps_executed: u64,
    /// Time-averaged end-of-step queue lengths.
    pub mean_queue_lengths: Vec<QueueMean>,
    pub wall_time_secs: f64,
}

/// Equality of simulated outcomes; wall time is not compared.
impl PartialEq for RunReport {
    fn eq(&self, other: &Self) -> bool {
        self.policy == other.policy
            && self.steps == other.steps
            && self.seed == other.seed
            && self.pairs == other.pairs
            && self.final_q_total == other.final_q_total
            && self.final_d_total == other.final_d_total
            && self.generated_ebits == other.generated_ebits
            && self.lost_ebits == other.lost_ebits
            && self.consumed_ebits == other.consumed_ebits
            && self.swaps_executed == other.swaps_executed
            && self.mean_queue_lengths == other.mean_queue_lengths
    }
}

impl RunReport {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }
}

pub fn unserved_fraction(served: u64, arrived: u64) -> f64 {
    if arrived == 0 {
        0.0
    } else {
        1.0 - served as f64 / arrived as f64
    }
}

/// Step-by-step simulation: observe, decide, apply.
pub struct Simulation {
    ts: TransitionSystem,
    scheduler: Scheduler,
    state: NetworkState,
    rng: RandomSource,
    seed: u64,
    queue_sums: Vec<u64>,
    demand_sums: Vec<u64>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let ts = build_transition_system(&cfg.spec)?;
        let n = ts.n_queues();
        Ok(Simulation {
            scheduler: Scheduler {
                config: cfg.policy,
                solver: cfg.solver,
            },
            state: NetworkState::empty(n),
            rng: RandomSource::new(cfg.seed),
            seed: cfg.seed,
            queue_sums: vec![0; n],
            demand_sums: vec![0; n],
            ts,
        })
    }

    pub fn transition_system(&self) -> &TransitionSystem {
        &self.ts
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    /// Runs one step; returns the draws and the decision that was applied.
    pub fn step(&mut self) -> Result<(StepObservation, Decision)> {
        let t = self.state.t;
        let obs = observe_step(&self.state, &self.ts, &mut self.rng).map_err(|e| Error::at_step(t, e))?;
        let dec = self
            .scheduler
            .decide(&self.state, &obs, &self.ts, &mut self.rng)
            .map_err(|e| Error::at_step(t, e))?;
        advance(&mut self.state, &self.ts, &obs, &dec).map_err(|e| Error::at_step(t, e))?;
        for e in 0..self.ts.n_queues() {
            self.queue_sums[e] += self.state.q[e];
            self.demand_sums[e] += self.state.d[e];
        }
        Ok((obs, dec))
    }

    pub fn report(&self, wall_time_secs: f64) -> RunReport {
        let ts = &self.ts;
        let s = &self.state;
        let pairs = ts
            .user_queues()
            .iter()
            .map(|&e| {
                let p = ts.queues()[e].pair;
                PairReport {
                    a: ts.nodes()[p.lo].clone(),
                    b: ts.nodes()[p.hi].clone(),
                    arrived: s.arrived_demands[e],
                    served: s.served_demands[e],
                    unserved_fraction: unserved_fraction(s.served_demands[e], s.arrived_demands[e]),
                }
            })
            .collect();
        let steps = s.t.max(1) as f64;
        RunReport {
            policy: self.scheduler.config.kind,
            steps: s.t,
            seed: self.seed,
            pairs,
            final_q_total: s.total_ebits(),
            final_d_total: s.total_demands(),
            generated_ebits: s.generated_ebits,
            lost_ebits: s.lost_ebits,
            consumed_ebits: s.consumed_ebits,
            swaps_executed: s.swaps_executed,
            mean_queue_lengths: (0..ts.n_queues())
                .map(|e| QueueMean {
                    queue: ts.queue_label(e),
                    ebits: self.queue_sums[e] as f64 / steps,
                    demands: self.demand_sums[e] as f64 / steps,
                })
                .collect(),
            wall_time_secs,
        }
    }
}

pub fn run_simulation(cfg: &SimConfig) -> Result<RunReport> {
    run_simulation_traced(cfg, None)
}

/// [`run_simulation`] with an optional per-step CSV trace.
pub fn run_simulation_traced(cfg: &SimConfig, trace: Option<&mut dyn Write>) -> Result<RunReport> {
    let clock = Stopwatch::start();
    let mut sim = Simulation::new(cfg)?;
    let mut writer = match trace {
        Some(out) => Some(TraceWriter::new(out, &sim.ts).map_err(|e| Error::io("trace", e))?),
        None => None,
    };
    for _ in 0..cfg.steps {
        let before = writer.is_some().then(|| sim.state.clone());
        let (_, dec) = sim.step()?;
        if let (Some(w), Some(state)) = (writer.as_mut(), before) {
            w.record(&state, &dec).map_err(|e| Error::io("trace", e))?;
        }
    }
    Ok(sim.report(clock.seconds()))
}

/// Wall-clock timer; reads zero on wasm, which has no monotonic clock in std.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}
