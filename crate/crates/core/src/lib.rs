//! Discrete-time model of entanglement distribution over a network of
//! quantum switches, with greedy and Max-Weight schedulers and a harness
//! for sweeping achievable rate regions.
//!
//! The pipeline is:
//!
//! 1. [`topology`] compiles a [`NetworkSpec`] (nodes, fibered edges, service
//!    routes, user pairs) into a [`TransitionSystem`]: the ordered queue set,
//!    the swap transitions and the matrices `M~` and `N~`.
//! 2. [`dynamics`] holds the [`NetworkState`] and advances it one step at a
//!    time: draw arrivals and losses, ask a policy for a decision, apply
//!    `q' = q - l + a + M~ r` and `d' = d + b + N~ r`.
//! 3. [`policies`] produces decisions; the Max-Weight variants solve a small
//!    integer program per step through [`ilp`].
//! 4. [`harness`] loads experiment configs, runs single simulations and
//!    parallel rate-region sweeps, and writes CSV and heatmap output.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod ilp;
pub mod policies;
pub mod stochastic;
pub mod topology;

pub use dynamics::{Decision, NetworkState, StepObservation};
pub use error::{Error, Result};
pub use policies::{PolicyConfig, PolicyKind};
pub use stochastic::RandomSource;
pub use topology::{NetworkSpec, TransitionSystem};
