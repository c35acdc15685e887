//! Scheduling policies: greedy, global Max-Weight and localized Max-Weight.
//!
//! Each maps the start-of-step state, the step's draws and the transition
//! system to a feasible [`Decision`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{availability, Decision, NetworkState, StepObservation};
use crate::error::{Error, Result};
use crate::ilp::{self, IlpInstance, SolverOptions};
use crate::stochastic::RandomSource;
use crate::topology::TransitionSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Greedy,
    GlobalMw,
    LocalMw,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Greedy, PolicyKind::GlobalMw, PolicyKind::LocalMw];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::GlobalMw => "global_mw",
            PolicyKind::LocalMw => "local_mw",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}` (greedy, global_mw, local_mw)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Weight of demand backlog relative to ebit backlog.
    pub gamma: f64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        PolicyConfig { kind, gamma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_finite() && self.gamma >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)))
        }
    }
}

/// Max-Weight objective `gamma * u^T N~ + s^T M~` for ebit supply `s` and
/// demand supply `u`, evaluated column by column.
pub fn max_weight_weights(ts: &TransitionSystem, ebit_supply: &[f64], demand_supply: &[f64], gamma: f64) -> Vec<f64> {
    let mut w = Vec::with_capacity(ts.dim());
    for col in ts.swap_columns() {
        w.push(ebit_supply[col.produces] - ebit_supply[col.consumes[0]] - ebit_supply[col.consumes[1]]);
    }
    for e in 0..ts.n_queues() {
        w.push(-gamma * demand_supply[e] - ebit_supply[e]);
    }
    w
}

/// Random swapping until nothing more can be swapped; demand is served
/// from whatever end-to-end ebits are available before and after.
pub fn greedy_decide(
    state: &NetworkState,
    obs: &StepObservation,
    ts: &TransitionSystem,
    rng: &mut RandomSource,
) -> Decision {
    let avail = availability(state, obs);
    let mut ebits = avail.ebits;
    let mut demands = avail.demands;
    let mut dec = Decision::zero(ts.dim());

    let mut users = ts.user_queues().to_vec();
    let serve = |order: &[usize], ebits: &mut [u64], demands: &mut [u64], dec: &mut Decision| {
        for &e in order {
            let x = ebits[e].min(demands[e]);
            ebits[e] -= x;
            demands[e] -= x;
            dec.r[ts.consumption_var(e)] += x;
        }
    };
    rng.shuffle(&mut users);
    serve(&users, &mut ebits, &mut demands, &mut dec);

    let cols = ts.swap_columns();
    let mut ready = Vec::with_capacity(cols.len());
    loop {
        ready.clear();
        ready.extend(
            cols.iter()
                .enumerate()
                .filter(|(_, c)| ebits[c.consumes[0]] > 0 && ebits[c.consumes[1]] > 0)
                .map(|(t, _)| t),
        );
        if ready.is_empty() {
            break;
        }
        let t = ready[rng.index(ready.len())];
        let c = cols[t];
        ebits[c.consumes[0]] -= 1;
        ebits[c.consumes[1]] -= 1;
        ebits[c.produces] += 1;
        dec.r[t] += 1;
    }

    serve(&users, &mut ebits, &mut demands, &mut dec);
    dec
}

/// Fully informed Max-Weight: exact optimum of the step's program built
/// from the true `q - l + a` and `d + b`.
pub fn global_mw_decide(
    state: &NetworkState,
    obs: &StepObservation,
    ts: &TransitionSystem,
    cfg: &PolicyConfig,
    solver: &SolverOptions,
) -> Result<Decision> {
    let avail = availability(state, obs);
    let s: Vec<f64> = avail.ebits.iter().map(|&x| x as f64).collect();
    let u: Vec<f64> = avail.demands.iter().map(|&x| x as f64).collect();
    solve_max_weight(ts, s, u, cfg.gamma, solver)
}

fn solve_max_weight(
    ts: &TransitionSystem,
    ebit_supply: Vec<f64>,
    demand_supply: Vec<f64>,
    gamma: f64,
    solver: &SolverOptions,
) -> Result<Decision> {
    let inst = IlpInstance {
        swaps: ts.swap_columns(),
        weights: max_weight_weights(ts, &ebit_supply, &demand_supply, gamma),
        ebit_supply,
        demand_supply,
    };
    Ok(Decision {
        r: ilp::solve_with(&inst, solver)?.r,
    })
}

/// Exact end-of-step draws on one queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalObservation {
    pub queue: usize,
    pub arrivals: u64,
    pub losses: u64,
    pub demand_arrivals: u64,
}

/// What node `node` knows when it decides: the start-of-step snapshot of
/// every queue, exact draws on its incident queues, and the mean rates.
#[derive(Clone, Debug)]
pub struct InfoSet<'a> {
    pub node: usize,
    /// Queues with `node` as an endpoint, physical and virtual.
    pub exact_edges: Vec<usize>,
    pub q: &'a [u64],
    pub d: &'a [u64],
    pub local: Vec<LocalObservation>,
    pub alpha: &'a [f64],
    pub beta: &'a [f64],
    pub eta: f64,
}

impl InfoSet<'_> {
    /// Conditional expectations of `q - l + a` and `d + b`.
    pub fn expected_supplies(&self) -> (Vec<f64>, Vec<f64>) {
        let mut s: Vec<f64> = self
            .q
            .iter()
            .zip(self.alpha)
            .map(|(&q, &a)| self.eta * q as f64 + a)
            .collect();
        let mut u: Vec<f64> = self.d.iter().zip(self.beta).map(|(&d, &b)| d as f64 + b).collect();
        for o in &self.local {
            s[o.queue] = (self.q[o.queue] - o.losses + o.arrivals) as f64;
            u[o.queue] = (self.d[o.queue] + o.demand_arrivals) as f64;
        }
        (s, u)
    }
}

pub fn build_info_set<'a>(
    state: &'a NetworkState,
    obs: &StepObservation,
    ts: &'a TransitionSystem,
    node: &str,
) -> Result<InfoSet<'a>> {
    let id = ts.node_id(node)?;
    Ok(info_set_for(state, obs, ts, id))
}

fn info_set_for<'a>(
    state: &'a NetworkState,
    obs: &StepObservation,
    ts: &'a TransitionSystem,
    node: usize,
) -> InfoSet<'a> {
    let exact_edges = ts.incident_queues(node);
    let local = exact_edges
        .iter()
        .map(|&e| LocalObservation {
            queue: e,
            arrivals: obs.arrivals[e],
            losses: obs.losses[e],
            demand_arrivals: obs.demand_arrivals[e],
        })
        .collect();
    InfoSet {
        node,
        exact_edges,
        q: &state.q,
        d: &state.d,
        local,
        alpha: ts.alpha(),
        beta: ts.beta(),
        eta: ts.eta(),
    }
}

/// Node-local Max-Weight proposal over the whole network, with expected
/// values standing in for draws the node cannot see.
pub fn local_mw_node_decide(
    info: &InfoSet,
    ts: &TransitionSystem,
    cfg: &PolicyConfig,
    solver: &SolverOptions,
) -> Result<Decision> {
    let (s, u) = info.expected_supplies();
    solve_max_weight(ts, s, u, cfg.gamma, solver)
}

/// Merges per-node proposals (indexed by node id) into one feasible
/// decision.
///
/// Swap `i[j]k` is taken from node `j`, which performs the measurement; a
/// consumption on `(i,j)` is the smaller of the proposals of `i` and `j`.
/// Execution runs in ascending rank: consumptions on rank-`k` queues, then
/// swaps producing rank-`k` queues, each clamped to what is actually
/// available at that point. User service on a queue therefore always comes
/// before any swap touching it, and a shortfall low in the chain starves the
/// swaps built on it.
pub fn blend(proposals: &[Decision], state: &NetworkState, obs: &StepObservation, ts: &TransitionSystem) -> Decision {
    let avail = availability(state, obs);
    let mut ebits = avail.ebits;
    let mut demands = avail.demands;
    let mut dec = Decision::zero(ts.dim());
    let rank_of = |q: usize| ts.queues()[q].rank;
    let mut ranks: Vec<u32> = ts.queues().iter().map(|q| q.rank).collect();
    ranks.sort_unstable();
    ranks.dedup();

    for k in ranks {
        for e in 0..ts.n_queues() {
            if rank_of(e) != k {
                continue;
            }
            let v = ts.consumption_var(e);
            let pair = ts.queues()[e].pair;
            let proposed = proposals[pair.lo].r[v].min(proposals[pair.hi].r[v]);
            let x = proposed.min(ebits[e]).min(demands[e]);
            ebits[e] -= x;
            demands[e] -= x;
            dec.r[v] = x;
        }
        for (t, tr) in ts.transitions().iter().enumerate() {
            let c = tr.column;
            if rank_of(c.produces) != k {
                continue;
            }
            let proposed = proposals[tr.mid].r[t];
            let x = proposed.min(ebits[c.consumes[0]]).min(ebits[c.consumes[1]]);
            ebits[c.consumes[0]] -= x;
            ebits[c.consumes[1]] -= x;
            ebits[c.produces] += x;
            dec.r[t] = x;
        }
    }
    dec
}

/// Localized Max-Weight: every node solves its own program, then the
/// proposals are blended.
pub fn local_mw_decide(
    state: &NetworkState,
    obs: &StepObservation,
    ts: &TransitionSystem,
    cfg: &PolicyConfig,
    solver: &SolverOptions,
) -> Result<Decision> {
    let n_nodes = ts.nodes().len();
    let mut proposals = Vec::with_capacity(n_nodes);
    for node in 0..n_nodes {
        if !decides_anything(ts, node) {
            proposals.push(Decision::zero(ts.dim()));
            continue;
        }
        let info = info_set_for(state, obs, ts, node);
        proposals.push(local_mw_node_decide(&info, ts, cfg, solver)?);
    }
    Ok(blend(&proposals, state, obs, ts))
}

/// Whether any part of `node`'s proposal survives blending.
fn decides_anything(ts: &TransitionSystem, node: usize) -> bool {
    ts.transitions().iter().any(|t| t.mid == node)
        || ts.user_queues().iter().any(|&e| ts.queues()[e].pair.touches(node))
}

/// A configured policy ready to make per-step decisions.
#[derive(Clone, Debug)]
pub struct Scheduler {
    pub config: PolicyConfig,
    pub solver: SolverOptions,
}

impl Scheduler {
    pub fn new(config: PolicyConfig) -> Self {
        Scheduler {
            config,
            solver: SolverOptions::default(),
        }
    }

    pub fn decide(
        &self,
        state: &NetworkState,
        obs: &StepObservation,
        ts: &TransitionSystem,
        rng: &mut RandomSource,
    ) -> Result<Decision> {
        match self.config.kind {
            PolicyKind::Greedy => Ok(greedy_decide(state, obs, ts, rng)),
            PolicyKind::GlobalMw => global_mw_decide(state, obs, ts, &self.config, &self.solver),
            PolicyKind::LocalMw => local_mw_decide(state, obs, ts, &self.config, &self.solver),
        }
    }
}
