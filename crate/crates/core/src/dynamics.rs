//! Network state and the one-step update.
//!
//! Timing within a step: the snapshot `q(t)`, `d(t)` is taken at the start;
//! arrivals `a(t)`, `b(t)` and losses `l(t)` accrue during the step (losses
//! only hit ebits present at the start); the decision `r(t)` is then taken
//! against `q - l + a` and `d + b`, and
//!
//! ```text
//! q(t+1) = q(t) - l(t) + a(t) + M~ r(t)
//! d(t+1) = d(t) + b(t) + N~ r(t)
//! ```

use std::io::Write;

use crate::error::{Error, Result};
use crate::stochastic::{sample_losses, sample_poisson, RandomSource};
use crate::topology::TransitionSystem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkState {
    /// Stored ebits per queue.
    pub q: Vec<u64>,
    /// Pending requests per queue.
    pub d: Vec<u64>,
    pub t: u64,
    pub arrived_demands: Vec<u64>,
    pub served_demands: Vec<u64>,
    pub generated_ebits: u64,
    pub lost_ebits: u64,
    pub consumed_ebits: u64,
    pub swaps_executed: u64,
}

impl NetworkState {
    pub fn empty(n_queues: usize) -> Self {
        NetworkState {
            q: vec![0; n_queues],
            d: vec![0; n_queues],
            t: 0,
            arrived_demands: vec![0; n_queues],
            served_demands: vec![0; n_queues],
            generated_ebits: 0,
            lost_ebits: 0,
            consumed_ebits: 0,
            swaps_executed: 0,
        }
    }

    /// State with preloaded ebits, as if they had been generated earlier.
    pub fn with_ebits(q: Vec<u64>) -> Self {
        let mut s = NetworkState::empty(q.len());
        s.generated_ebits = q.iter().sum();
        s.q = q;
        s
    }

    /// Demand counterpart of [`NetworkState::with_ebits`].
    pub fn with_demands(mut self, d: Vec<u64>) -> Self {
        assert_eq!(d.len(), self.q.len(), "dimension mismatch");
        for (arr, &x) in self.arrived_demands.iter_mut().zip(&d) {
            *arr += x;
        }
        self.d = d;
        self
    }

    pub fn total_ebits(&self) -> u64 {
        self.q.iter().sum()
    }

    pub fn total_demands(&self) -> u64 {
        self.d.iter().sum()
    }
}

/// Random draws of one step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepObservation {
    /// Ebits generated on each queue (zero on virtual queues).
    pub arrivals: Vec<u64>,
    /// Ebits lost from the start-of-step stock.
    pub losses: Vec<u64>,
    /// New requests (zero outside user pairs).
    pub demand_arrivals: Vec<u64>,
}

impl StepObservation {
    pub fn quiet(n_queues: usize) -> Self {
        StepObservation {
            arrivals: vec![0; n_queues],
            losses: vec![0; n_queues],
            demand_arrivals: vec![0; n_queues],
        }
    }
}

/// Scheduling decision: swap counts per transition followed by consumption
/// counts per queue.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Decision {
    pub r: Vec<u64>,
}

impl Decision {
    pub fn zero(dim: usize) -> Self {
        Decision { r: vec![0; dim] }
    }

    pub fn is_zero(&self) -> bool {
        self.r.iter().all(|&x| x == 0)
    }

    pub fn swaps<'a>(&'a self, ts: &TransitionSystem) -> &'a [u64] {
        &self.r[..ts.n_transitions()]
    }

    pub fn consumptions<'a>(&'a self, ts: &TransitionSystem) -> &'a [u64] {
        &self.r[ts.n_transitions()..]
    }
}

/// Resources a decision may draw on this step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Availability {
    /// `q - l + a`
    pub ebits: Vec<u64>,
    /// `d + b`
    pub demands: Vec<u64>,
}

/// Draws this step's arrivals, losses and demand arrivals.
pub fn observe_step(state: &NetworkState, ts: &TransitionSystem, rng: &mut RandomSource) -> Result<StepObservation> {
    let n = ts.n_queues();
    let mut obs = StepObservation::quiet(n);
    let eta = ts.eta();
    for e in 0..n {
        if ts.queues()[e].physical {
            obs.arrivals[e] = sample_poisson(rng, ts.alpha()[e])?;
        }
        obs.losses[e] = sample_losses(rng, state.q[e], eta)?;
        obs.demand_arrivals[e] = sample_poisson(rng, ts.beta()[e])?;
    }
    Ok(obs)
}

pub fn availability(state: &NetworkState, obs: &StepObservation) -> Availability {
    let ebits = state
        .q
        .iter()
        .zip(&obs.losses)
        .zip(&obs.arrivals)
        .map(|((&q, &l), &a)| q.saturating_sub(l) + a)
        .collect();
    let demands = state.d.iter().zip(&obs.demand_arrivals).map(|(&d, &b)| d + b).collect();
    Availability { ebits, demands }
}

fn check_observation(state: &NetworkState, ts: &TransitionSystem, obs: &StepObservation) -> Result<()> {
    let n = ts.n_queues();
    if obs.arrivals.len() != n || obs.losses.len() != n || obs.demand_arrivals.len() != n {
        return Err(Error::Argument("observation has the wrong length".into()));
    }
    for e in 0..n {
        if obs.losses[e] > state.q[e] {
            return Err(Error::Argument(format!(
                "queue {} loses {} of {} stored ebits",
                ts.queue_label(e),
                obs.losses[e],
                state.q[e]
            )));
        }
        if !ts.queues()[e].physical && obs.arrivals[e] != 0 {
            return Err(Error::Argument(format!(
                "virtual queue {} cannot receive arrivals",
                ts.queue_label(e)
            )));
        }
        if obs.demand_arrivals[e] != 0 && !ts.user_queues().contains(&e) {
            return Err(Error::Argument(format!(
                "queue {} is not a user pair and cannot receive demands",
                ts.queue_label(e)
            )));
        }
    }
    Ok(())
}

/// Net ebit change `M~ r` per queue, split into (produced, consumed).
fn ebit_flows(ts: &TransitionSystem, decision: &Decision) -> (Vec<u64>, Vec<u64>) {
    let n = ts.n_queues();
    let mut produced = vec![0u64; n];
    let mut consumed = vec![0u64; n];
    for (col, &x) in ts.swap_columns().iter().zip(decision.swaps(ts)) {
        if x == 0 {
            continue;
        }
        consumed[col.consumes[0]] += x;
        consumed[col.consumes[1]] += x;
        produced[col.produces] += x;
    }
    for (e, &x) in decision.consumptions(ts).iter().enumerate() {
        consumed[e] += x;
    }
    (produced, consumed)
}

/// Applies `decision` to `state` under observation `obs`.
///
/// Errors if the decision would take any queue negative.
pub fn apply_step(
    state: &NetworkState,
    ts: &TransitionSystem,
    obs: &StepObservation,
    decision: &Decision,
) -> Result<NetworkState> {
    let mut next = state.clone();
    advance(&mut next, ts, obs, decision)?;
    Ok(next)
}

/// In-place form of [`apply_step`]; `state` is untouched on error.
pub fn advance(
    state: &mut NetworkState,
    ts: &TransitionSystem,
    obs: &StepObservation,
    decision: &Decision,
) -> Result<()> {
    if decision.r.len() != ts.dim() {
        return Err(Error::Argument(format!(
            "decision has {} components, expected {}",
            decision.r.len(),
            ts.dim()
        )));
    }
    check_observation(state, ts, obs)?;
    let avail = availability(state, obs);
    let (produced, consumed) = ebit_flows(ts, decision);
    for e in 0..ts.n_queues() {
        if consumed[e] > avail.ebits[e] + produced[e] {
            return Err(Error::InfeasibleDecision {
                queue: ts.queue_label(e),
                required: consumed[e] - produced[e],
                available: avail.ebits[e],
            });
        }
    }
    let served = decision.consumptions(ts);
    for (e, (&x, &have)) in served.iter().zip(&avail.demands).enumerate() {
        if x > have {
            return Err(Error::InfeasibleDecision {
                queue: format!("demand {}", ts.queue_label(e)),
                required: x,
                available: have,
            });
        }
    }

    for e in 0..ts.n_queues() {
        state.q[e] = avail.ebits[e] + produced[e] - consumed[e];
        state.d[e] = avail.demands[e] - served[e];
        state.arrived_demands[e] += obs.demand_arrivals[e];
        state.served_demands[e] += served[e];
    }
    state.generated_ebits += obs.arrivals.iter().sum::<u64>();
    state.lost_ebits += obs.losses.iter().sum::<u64>();
    state.consumed_ebits += served.iter().sum::<u64>();
    state.swaps_executed += decision.swaps(ts).iter().sum::<u64>();
    state.t += 1;
    Ok(())
}

/// `generated - lost - consumed - swaps - sum(q)`. Every swap nets one ebit
/// out of the system, so this is zero for any trajectory built by
/// [`apply_step`] from an empty or [`NetworkState::with_ebits`] start.
pub fn total_ebit_balance(state: &NetworkState) -> i64 {
    state.generated_ebits as i64
        - state.lost_ebits as i64
        - state.consumed_ebits as i64
        - state.swaps_executed as i64
        - state.total_ebits() as i64
}

/// `sum(arrived) - sum(served) - sum(d)`; zero on consistent trajectories.
pub fn demand_balance(state: &NetworkState) -> i64 {
    state.arrived_demands.iter().sum::<u64>() as i64
        - state.served_demands.iter().sum::<u64>() as i64
        - state.total_demands() as i64
}

/// CSV writer for per-step traces: one row per step with the start-of-step
/// queues and the decision taken.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, ts: &TransitionSystem) -> std::io::Result<Self> {
        let mut header = vec!["step".to_string()];
        header.extend((0..ts.n_queues()).map(|e| format!("q_{}", ts.queue_label(e))));
        header.extend((0..ts.n_queues()).map(|e| format!("d_{}", ts.queue_label(e))));
        header.extend((0..ts.dim()).map(|v| format!("r_{}", ts.variable_label(v))));
        writeln!(out, "{}", header.join(","))?;
        Ok(TraceWriter { out })
    }

    pub fn record(&mut self, state: &NetworkState, decision: &Decision) -> std::io::Result<()> {
        let mut row = vec![state.t.to_string()];
        row.extend(state.q.iter().map(u64::to_string));
        row.extend(state.d.iter().map(u64::to_string));
        row.extend(decision.r.iter().map(u64::to_string));
        writeln!(self.out, "{}", row.join(","))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
