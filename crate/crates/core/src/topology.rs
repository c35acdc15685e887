//! Compilation of a declarative network description into the queue index,
//! swap transitions and the `M~` / `N~` matrices that drive the dynamics.
//!
//! Every unordered node pair that appears as a contiguous sub-path of a
//! service route owns an ebit queue (and a demand queue alongside it). A
//! transition `i[j]k` is a Bell-state measurement at `j` that consumes one
//! ebit from `(i,j)` and one from `(j,k)` and produces one on `(i,k)`; the
//! allowed transitions are every ordered position triple of every route.
//!
//! Decision vectors have `n_transitions + n_queues` components: one per swap
//! transition followed by one consumption variable per queue.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::ilp::SwapColumn;
use crate::stochastic::eta_from_lifetime;

/// How long an ebit survives in memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MemoryModel {
    /// Probability that a stored ebit survives one time step.
    Efficiency(f64),
    /// Mean memory lifetime and step duration, in the same time unit.
    Lifetime { tau: f64, dt: f64 },
}

impl MemoryModel {
    pub fn eta(&self) -> Result<f64> {
        match *self {
            MemoryModel::Efficiency(eta) => Ok(eta),
            MemoryModel::Lifetime { tau, dt } => eta_from_lifetime(tau, dt),
        }
    }
}

/// A fibered link with its mean ebit generation rate (ebits per step).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSpec {
    pub a: String,
    pub b: String,
    pub alpha: f64,
}

/// An (Alice, Bob) pair with its mean demand rate (requests per step).
#[derive(Clone, Debug, PartialEq)]
pub struct UserSpec {
    pub a: String,
    pub b: String,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    pub routes: Vec<Vec<String>>,
    pub users: Vec<UserSpec>,
    pub memory: MemoryModel,
}

impl NetworkSpec {
    /// Empty network over `nodes` with lossless memories.
    pub fn new<S: AsRef<str>>(nodes: &[S]) -> Self {
        NetworkSpec {
            nodes: nodes.iter().map(|n| n.as_ref().to_string()).collect(),
            edges: Vec::new(),
            routes: Vec::new(),
            users: Vec::new(),
            memory: MemoryModel::Efficiency(1.0),
        }
    }

    /// Linear chain over `nodes`: one edge per consecutive pair at rate
    /// `alpha`, and a single route spanning the whole chain.
    pub fn chain<S: AsRef<str>>(nodes: &[S], alpha: f64) -> Self {
        let mut spec = NetworkSpec::new(nodes);
        for w in nodes.windows(2) {
            spec = spec.edge(w[0].as_ref(), w[1].as_ref(), alpha);
        }
        spec.route(nodes)
    }

    pub fn edge(mut self, a: &str, b: &str, alpha: f64) -> Self {
        self.edges.push(EdgeSpec {
            a: a.to_string(),
            b: b.to_string(),
            alpha,
        });
        self
    }

    pub fn route<S: AsRef<str>>(mut self, path: &[S]) -> Self {
        self.routes.push(path.iter().map(|n| n.as_ref().to_string()).collect());
        self
    }

    pub fn user(mut self, a: &str, b: &str, beta: f64) -> Self {
        self.users.push(UserSpec {
            a: a.to_string(),
            b: b.to_string(),
            beta,
        });
        self
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.memory = MemoryModel::Efficiency(eta);
        self
    }

    /// The six-node bottleneck network used for the rate-region experiments:
    /// chain ABCDEF with routes ABCDE and BCDEF serving users (A,E) and (B,F).
    pub fn bottleneck(alpha: f64, eta: f64, beta_ae: f64, beta_bf: f64) -> Self {
        let nodes = ["A", "B", "C", "D", "E", "F"];
        let mut spec = NetworkSpec::new(&nodes);
        for w in nodes.windows(2) {
            spec = spec.edge(w[0], w[1], alpha);
        }
        spec.route(&["A", "B", "C", "D", "E"])
            .route(&["B", "C", "D", "E", "F"])
            .user("A", "E", beta_ae)
            .user("B", "F", beta_bf)
            .eta(eta)
    }

    /// Sets the demand rate of an existing user pair (either orientation).
    pub fn set_beta(&mut self, a: &str, b: &str, beta: f64) -> Result<()> {
        let user = self
            .users
            .iter_mut()
            .find(|u| (u.a == a && u.b == b) || (u.a == b && u.b == a))
            .ok_or_else(|| Error::UnknownQueue(a.to_string(), b.to_string()))?;
        user.beta = beta;
        Ok(())
    }
}

/// Canonical unordered node pair: `lo < hi` in node declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePair {
    pub lo: usize,
    pub hi: usize,
}

impl NodePair {
    pub fn new(a: usize, b: usize) -> Self {
        NodePair {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn touches(&self, node: usize) -> bool {
        self.lo == node || self.hi == node
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Queue {
    pub pair: NodePair,
    pub physical: bool,
    pub rank: u32,
}

/// Swap `left[mid]right`, stored with `left < right` in node order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub left: usize,
    pub mid: usize,
    pub right: usize,
    pub column: SwapColumn,
}

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i32) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = i32> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    pub fn column_sum(&self, c: usize) -> i32 {
        self.column(c).sum()
    }

    /// `self * x` for an integer vector.
    pub fn mul_vec(&self, x: &[i64]) -> Vec<i64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&m, &v)| m as i64 * v).sum())
            .collect()
    }

    /// `y^T * self` for a real row vector.
    pub fn left_mul(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += yr * m as f64;
            }
        }
        out
    }
}

/// Compiled network: queue index, transitions, `M~`, `N~`, ranks and rates.
#[derive(Clone, Debug)]
pub struct TransitionSystem {
    nodes: Vec<String>,
    queues: Vec<Queue>,
    transitions: Vec<Transition>,
    swap_columns: Vec<SwapColumn>,
    queue_index: HashMap<NodePair, usize>,
    m_tilde: IntMatrix,
    n_tilde: IntMatrix,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    user_queues: Vec<usize>,
    eta: f64,
    short_labels: bool,
}

fn check_rate(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Spec(format!("{what} must be finite and >= 0, got {value}")))
    }
}

/// Compiles `spec` into its transition system.
pub fn build_transition_system(spec: &NetworkSpec) -> Result<TransitionSystem> {
    let mut node_index = HashMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if node_index.insert(n.as_str(), i).is_some() {
            return Err(Error::Spec(format!("duplicate node `{n}`")));
        }
    }
    if spec.nodes.is_empty() {
        return Err(Error::Spec("network has no nodes".into()));
    }
    let lookup = |name: &str| {
        node_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    };

    let eta = spec.memory.eta()?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Spec(format!("memory efficiency must lie in (0, 1], got {eta}")));
    }

    // Physical queues in edge declaration order.
    let mut physical: Vec<(NodePair, f64)> = Vec::new();
    for e in &spec.edges {
        let (a, b) = (lookup(&e.a)?, lookup(&e.b)?);
        if a == b {
            return Err(Error::Spec(format!("self-loop edge on `{}`", e.a)));
        }
        check_rate(&format!("alpha of edge ({}, {})", e.a, e.b), e.alpha)?;
        let pair = NodePair::new(a, b);
        if physical.iter().any(|(p, _)| *p == pair) {
            return Err(Error::Spec(format!("duplicate edge ({}, {})", e.a, e.b)));
        }
        physical.push((pair, e.alpha));
    }
    let is_physical = |p: NodePair| physical.iter().any(|(q, _)| *q == p);

    let mut virtual_pairs = BTreeSet::new();
    // (lo, mid, hi) keyed so duplicates across routes collapse.
    let mut triples = BTreeSet::new();
    for route in &spec.routes {
        if route.len() < 2 {
            return Err(Error::Spec(format!("route {route:?} needs at least two nodes")));
        }
        let path = route.iter().map(|n| lookup(n)).collect::<Result<Vec<_>>>()?;
        let distinct: BTreeSet<_> = path.iter().collect();
        if distinct.len() != path.len() {
            return Err(Error::Spec(format!("route {route:?} revisits a node")));
        }
        for (w, names) in path.windows(2).zip(route.windows(2)) {
            if !is_physical(NodePair::new(w[0], w[1])) {
                return Err(Error::Spec(format!(
                    "route step ({}, {}) is not a physical edge",
                    names[0], names[1]
                )));
            }
        }
        for a in 0..path.len() {
            for b in a + 1..path.len() {
                let pair = NodePair::new(path[a], path[b]);
                if !is_physical(pair) {
                    virtual_pairs.insert(pair);
                }
                for c in b + 1..path.len() {
                    let (lo, hi) = (path[a].min(path[c]), path[a].max(path[c]));
                    triples.insert((lo, path[b], hi));
                }
            }
        }
    }

    // Ranks: minimum number of swaps needed to put one ebit on a pair,
    // i.e. the cheapest producing transition's input ranks plus one.
    let mut rank: BTreeMap<NodePair, u32> = BTreeMap::new();
    for (p, _) in &physical {
        rank.insert(*p, 0);
    }
    loop {
        let mut changed = false;
        for &(lo, mid, hi) in &triples {
            let (Some(&r1), Some(&r2)) = (rank.get(&NodePair::new(lo, mid)), rank.get(&NodePair::new(mid, hi))) else {
                continue;
            };
            let out = NodePair::new(lo, hi);
            if is_physical(out) {
                continue;
            }
            let cand = r1 + r2 + 1;
            if rank.get(&out).is_none_or(|&r| cand < r) {
                rank.insert(out, cand);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut queues: Vec<Queue> = physical
        .iter()
        .map(|(p, _)| Queue {
            pair: *p,
            physical: true,
            rank: 0,
        })
        .collect();
    let mut virtual_queues: Vec<Queue> = virtual_pairs
        .iter()
        .map(|p| Queue {
            pair: *p,
            physical: false,
            rank: rank[p],
        })
        .collect();
    virtual_queues.sort_by_key(|q| (q.rank, q.pair));
    queues.extend(virtual_queues);

    let queue_index: HashMap<NodePair, usize> = queues.iter().enumerate().map(|(i, q)| (q.pair, i)).collect();

    let mut transitions: Vec<Transition> = triples
        .iter()
        .map(|&(lo, mid, hi)| Transition {
            left: lo,
            mid,
            right: hi,
            column: SwapColumn {
                consumes: [
                    queue_index[&NodePair::new(lo, mid)],
                    queue_index[&NodePair::new(mid, hi)],
                ],
                produces: queue_index[&NodePair::new(lo, hi)],
            },
        })
        .collect();
    transitions.sort_by_key(|t| (queues[t.column.produces].rank, t.left, t.mid, t.right));

    let nq = queues.len();
    let nt = transitions.len();
    let mut m_tilde = IntMatrix::zeros(nq, nt + nq);
    let mut n_tilde = IntMatrix::zeros(nq, nt + nq);
    for (c, t) in transitions.iter().enumerate() {
        for &q in &t.column.consumes {
            m_tilde.set(q, c, -1);
        }
        m_tilde.set(t.column.produces, c, 1);
    }
    for q in 0..nq {
        m_tilde.set(q, nt + q, -1);
        n_tilde.set(q, nt + q, -1);
    }

    let mut alpha = vec![0.0; nq];
    for (p, a) in &physical {
        alpha[queue_index[p]] = *a;
    }

    let mut beta = vec![0.0; nq];
    let mut user_queues = Vec::with_capacity(spec.users.len());
    for u in &spec.users {
        let (a, b) = (lookup(&u.a)?, lookup(&u.b)?);
        if a == b {
            return Err(Error::Spec(format!("user pair ({}, {}) is degenerate", u.a, u.b)));
        }
        check_rate(&format!("beta of user pair ({}, {})", u.a, u.b), u.beta)?;
        let pair = NodePair::new(a, b);
        let served = spec.routes.iter().any(|r| {
            let (first, last) = (&r[0], &r[r.len() - 1]);
            (first == &u.a && last == &u.b) || (first == &u.b && last == &u.a)
        });
        if !served {
            return Err(Error::Spec(format!(
                "user pair ({}, {}) is not the endpoint pair of any route",
                u.a, u.b
            )));
        }
        let q = queue_index[&pair];
        if user_queues.contains(&q) {
            return Err(Error::Spec(format!("duplicate user pair ({}, {})", u.a, u.b)));
        }
        beta[q] = u.beta;
        user_queues.push(q);
    }

    let swap_columns = transitions.iter().map(|t| t.column).collect();
    Ok(TransitionSystem {
        short_labels: spec.nodes.iter().all(|n| n.chars().count() == 1),
        nodes: spec.nodes.clone(),
        queues,
        transitions,
        swap_columns,
        queue_index,
        m_tilde,
        n_tilde,
        alpha,
        beta,
        user_queues,
        eta,
    })
}

impl TransitionSystem {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn queues(&self) -> &[Queue] {
        &self.queues
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn swap_columns(&self) -> &[SwapColumn] {
        &self.swap_columns
    }

    pub fn n_queues(&self) -> usize {
        self.queues.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// Length of a decision vector.
    pub fn dim(&self) -> usize {
        self.transitions.len() + self.queues.len()
    }

    /// Index of the consumption variable of `queue` in a decision vector.
    pub fn consumption_var(&self, queue: usize) -> usize {
        self.transitions.len() + queue
    }

    pub fn m_tilde(&self) -> &IntMatrix {
        &self.m_tilde
    }

    pub fn n_tilde(&self) -> &IntMatrix {
        &self.n_tilde
    }

    /// Per-queue mean ebit generation rate; zero on virtual queues.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Per-queue mean demand rate; zero outside user pairs.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Queue indices of the user pairs, in declaration order.
    pub fn user_queues(&self) -> &[usize] {
        &self.user_queues
    }

    pub fn node_id(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn queue_id(&self, a: &str, b: &str) -> Result<usize> {
        let unknown = || Error::UnknownQueue(a.to_string(), b.to_string());
        let (i, j) = (
            self.node_id(a).map_err(|_| unknown())?,
            self.node_id(b).map_err(|_| unknown())?,
        );
        self.queue_index.get(&NodePair::new(i, j)).copied().ok_or_else(unknown)
    }

    pub fn queue_of_pair(&self, pair: NodePair) -> Option<usize> {
        self.queue_index.get(&pair).copied()
    }

    /// Index of transition `left[mid]right` (endpoints in either order).
    pub fn transition_id(&self, left: &str, mid: &str, right: &str) -> Result<usize> {
        let (l, m, r) = (self.node_id(left)?, self.node_id(mid)?, self.node_id(right)?);
        let (l, r) = (l.min(r), l.max(r));
        self.transitions
            .iter()
            .position(|t| t.left == l && t.mid == m && t.right == r)
            .ok_or_else(|| Error::Argument(format!("no transition {left}[{mid}]{right}")))
    }

    /// Stored rank of the queue on `(a, b)`.
    pub fn queue_rank(&self, a: &str, b: &str) -> Result<u32> {
        Ok(self.queues[self.queue_id(a, b)?].rank)
    }

    /// Queues with `node` as one endpoint, in index order.
    pub fn incident_queues(&self, node: usize) -> Vec<usize> {
        (0..self.queues.len())
            .filter(|&q| self.queues[q].pair.touches(node))
            .collect()
    }

    fn pair_label(&self, a: usize, b: usize) -> String {
        if self.short_labels {
            format!("{}{}", self.nodes[a], self.nodes[b])
        } else {
            format!("{}-{}", self.nodes[a], self.nodes[b])
        }
    }

    pub fn queue_label(&self, q: usize) -> String {
        let p = self.queues[q].pair;
        self.pair_label(p.lo, p.hi)
    }

    pub fn transition_label(&self, t: usize) -> String {
        let t = &self.transitions[t];
        format!("{}[{}]{}", self.nodes[t.left], self.nodes[t.mid], self.nodes[t.right])
    }

    /// Label of decision variable `v`: a transition label or `c_<queue>`.
    pub fn variable_label(&self, v: usize) -> String {
        if v < self.transitions.len() {
            self.transition_label(v)
        } else {
            format!("c_{}", self.queue_label(v - self.transitions.len()))
        }
    }
}

impl fmt::Display for TransitionSystem {
    /// Tabular dump of queues, transitions, `M~`, `N~` and ranks.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "queues ({}):", self.n_queues())?;
        for (i, q) in self.queues.iter().enumerate() {
            writeln!(
                f,
                "  {i:>3}  {:<8} {:<8} rank {}  alpha {}  beta {}",
                self.queue_label(i),
                if q.physical { "physical" } else { "virtual" },
                q.rank,
                self.alpha[i],
                self.beta[i]
            )?;
        }
        writeln!(f, "transitions ({}):", self.n_transitions())?;
        for t in 0..self.n_transitions() {
            writeln!(f, "  {t:>3}  {}", self.transition_label(t))?;
        }
        let labels: Vec<String> = (0..self.dim()).map(|v| self.variable_label(v)).collect();
        let width = labels.iter().map(String::len).max().unwrap_or(2).max(3);
        let row_width = (0..self.n_queues())
            .map(|q| self.queue_label(q).len())
            .max()
            .unwrap_or(2);
        for (name, m) in [("M~", &self.m_tilde), ("N~", &self.n_tilde)] {
            writeln!(f, "{name}:")?;
            write!(f, "  {:row_width$}", "")?;
            for l in &labels {
                write!(f, " {l:>width$}")?;
            }
            writeln!(f)?;
            for q in 0..m.rows() {
                write!(f, "  {:row_width$}", self.queue_label(q))?;
                for v in m.row(q) {
                    write!(f, " {v:>width$}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> TransitionSystem {
        build_transition_system(&NetworkSpec::chain(&["A", "B", "C", "D"], 1.0)).unwrap()
    }

    #[test]
    fn abcd_layout() {
        let ts = abcd();
        let labels: Vec<_> = (0..ts.n_queues()).map(|q| ts.queue_label(q)).collect();
        assert_eq!(labels, ["AB", "BC", "CD", "AC", "BD", "AD"]);
        let tl: Vec<_> = (0..ts.n_transitions()).map(|t| ts.transition_label(t)).collect();
        assert_eq!(tl, ["A[B]C", "B[C]D", "A[B]D", "A[C]D"]);
        #[rustfmt::skip]
        let expected = [
            [-1,  0, -1,  0],
            [-1, -1,  0,  0],
            [ 0, -1,  0, -1],
            [ 1,  0,  0, -1],
            [ 0,  1, -1,  0],
            [ 0,  0,  1,  1],
        ];
        for (q, row) in expected.iter().enumerate() {
            assert_eq!(&ts.m_tilde().row(q)[..4], row);
        }
    }

    #[test]
    fn consumption_block_is_negative_identity() {
        let ts = abcd();
        let nt = ts.n_transitions();
        for q in 0..ts.n_queues() {
            for c in 0..ts.n_queues() {
                let want = if q == c { -1 } else { 0 };
                assert_eq!(ts.m_tilde().get(q, nt + c), want);
                assert_eq!(ts.n_tilde().get(q, nt + c), want);
            }
            for t in 0..nt {
                assert_eq!(ts.n_tilde().get(q, t), 0);
            }
        }
    }

    #[test]
    fn single_edge_route() {
        let spec = NetworkSpec::chain(&["A", "B"], 1.0).user("A", "B", 0.5);
        let ts = build_transition_system(&spec).unwrap();
        assert_eq!(ts.n_queues(), 1);
        assert_eq!(ts.n_transitions(), 0);
        assert_eq!(ts.m_tilde().row(0), &[-1]);
        assert_eq!(ts.beta(), &[0.5]);
    }

    #[test]
    fn ranks_on_abcd() {
        let ts = abcd();
        assert_eq!(ts.queue_rank("A", "B").unwrap(), 0);
        assert_eq!(ts.queue_rank("C", "A").unwrap(), 1);
        assert_eq!(ts.queue_rank("A", "D").unwrap(), 2);
        assert!(matches!(ts.queue_rank("A", "Z"), Err(Error::UnknownQueue(..))));
    }

    #[test]
    fn bottleneck_counts() {
        let ts = build_transition_system(&NetworkSpec::bottleneck(1.0, 0.9, 0.1, 0.1)).unwrap();
        assert_eq!(ts.n_queues(), 14);
        assert_eq!(ts.n_transitions(), 16);
        assert_eq!(ts.dim(), 30);
        assert_eq!(ts.queue_rank("A", "E").unwrap(), 3);
        assert_eq!(ts.user_queues().len(), 2);
    }

    #[test]
    fn rejects_route_off_the_fiber() {
        let spec = NetworkSpec::new(&["A", "B", "C"])
            .edge("A", "B", 1.0)
            .route(&["A", "B", "C"]);
        let err = build_transition_system(&spec).unwrap_err();
        assert!(err.to_string().contains("(B, C)"), "{err}");
    }

    #[test]
    fn rejects_unrouted_user() {
        let spec = NetworkSpec::chain(&["A", "B", "C"], 1.0).user("A", "B", 0.1);
        assert!(matches!(build_transition_system(&spec), Err(Error::Spec(_))));
    }

    #[test]
    fn rejects_bad_eta() {
        let spec = NetworkSpec::chain(&["A", "B"], 1.0).eta(0.0);
        assert!(build_transition_system(&spec).is_err());
        let spec = NetworkSpec::chain(&["A", "B"], 1.0).eta(1.5);
        assert!(build_transition_system(&spec).is_err());
    }

    #[test]
    fn lifetime_memory_model() {
        let mut spec = NetworkSpec::chain(&["A", "B"], 1.0);
        spec.memory = MemoryModel::Lifetime { tau: 10.0, dt: 1.0 };
        let ts = build_transition_system(&spec).unwrap();
        assert!((ts.eta() - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn incident_queues_of_b() {
        let ts = abcd();
        let b = ts.node_id("B").unwrap();
        let labels: Vec<_> = ts.incident_queues(b).iter().map(|&q| ts.queue_label(q)).collect();
        assert_eq!(labels, ["AB", "BC", "BD"]);
    }
}
