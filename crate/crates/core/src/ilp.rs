//! Exact solver for the per-step scheduling programs
//!
//! ```text
//! minimize   w . r
//! subject to -M~ r <= s      (ebit supply per queue)
//!            -N~ r <= u      (demand supply per queue)
//!            r integer, r >= 0
//! ```
//!
//! `M~` is given column by column: each swap consumes one ebit from two
//! queues and produces one on a third, and every queue additionally has a
//! consumption column (`-1` in both `M~` and `N~`). Supplies may be
//! fractional (expected values), variables stay integer.
//!
//! The solver is branch-and-bound over LP relaxations, each solved with a
//! dense bounded-variable primal simplex. Among optimal decisions it returns
//! the lexicographically smallest one in variable order.

use crate::dynamics::Decision;
use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const INT_TOL: f64 = 1e-6;
const OBJ_TOL: f64 = 1e-7;

/// One swap column of `M~`: `-1` on both consumed queues, `+1` on the
/// produced one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwapColumn {
    pub consumes: [usize; 2],
    pub produces: usize,
}

#[derive(Clone, Debug)]
pub struct IlpInstance<'a> {
    pub swaps: &'a [SwapColumn],
    /// Objective weights, swaps first then one consumption per queue.
    pub weights: Vec<f64>,
    /// Ebit supply `s` per queue.
    pub ebit_supply: Vec<f64>,
    /// Demand supply `u` per queue.
    pub demand_supply: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Maximum number of branch-and-bound nodes per solve.
    pub node_budget: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { node_budget: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub r: Vec<u64>,
    pub objective: f64,
    /// Branch-and-bound nodes explored, refinement included.
    pub nodes: usize,
}

impl<'a> IlpInstance<'a> {
    pub fn n_queues(&self) -> usize {
        self.ebit_supply.len()
    }

    pub fn dim(&self) -> usize {
        self.swaps.len() + self.n_queues()
    }

    pub fn validate(&self) -> Result<()> {
        let nq = self.n_queues();
        if self.demand_supply.len() != nq {
            return Err(Error::Argument(format!(
                "demand supply has {} entries, ebit supply {}",
                self.demand_supply.len(),
                nq
            )));
        }
        if self.weights.len() != self.dim() {
            return Err(Error::Argument(format!(
                "weight vector has {} entries, expected {}",
                self.weights.len(),
                self.dim()
            )));
        }
        for col in self.swaps {
            let [a, b] = col.consumes;
            if a >= nq || b >= nq || col.produces >= nq {
                return Err(Error::Argument("swap column refers to a missing queue".into()));
            }
            if a == b || a == col.produces || b == col.produces {
                return Err(Error::Argument("swap column must touch three distinct queues".into()));
            }
        }
        let bad = |v: &f64| !v.is_finite() || *v < 0.0;
        if self.ebit_supply.iter().any(bad) || self.demand_supply.iter().any(bad) {
            return Err(Error::Argument("supplies must be finite and >= 0".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Argument("weights must be finite".into()));
        }
        Ok(())
    }

    pub fn objective(&self, r: &[u64]) -> f64 {
        self.weights.iter().zip(r).map(|(w, &x)| w * x as f64).sum()
    }

    /// Net ebits drawn from each queue, `-M~ r`.
    pub fn ebit_draw(&self, r: &[u64]) -> Vec<i64> {
        let nt = self.swaps.len();
        let mut draw: Vec<i64> = r[nt..].iter().map(|&x| x as i64).collect();
        for (col, &x) in self.swaps.iter().zip(r) {
            draw[col.consumes[0]] += x as i64;
            draw[col.consumes[1]] += x as i64;
            draw[col.produces] -= x as i64;
        }
        draw
    }

    pub fn is_feasible(&self, r: &[u64]) -> bool {
        if r.len() != self.dim() {
            return false;
        }
        let nt = self.swaps.len();
        let ebits_ok = self
            .ebit_draw(r)
            .iter()
            .zip(&self.ebit_supply)
            .all(|(&d, &s)| d as f64 <= s + FEAS_TOL);
        let demands_ok = r[nt..]
            .iter()
            .zip(&self.demand_supply)
            .all(|(&x, &u)| x as f64 <= u + FEAS_TOL);
        ebits_ok && demands_ok
    }
}

/// Valid per-variable upper bounds: no feasible decision exceeds them.
///
/// A swap can run at most as often as its scarcer input can be supplied,
/// counting what the swaps producing that input could add; a consumption is
/// further capped by its demand supply. Everything is capped by the total
/// supply, since each unit of any variable removes one ebit net.
///
/// The swap bounds start at the total cap and are tightened until stable.
/// Every iterate is a valid bound, which also holds when producers feed each
/// other in a cycle.
pub fn upper_bounds(inst: &IlpInstance) -> Vec<u64> {
    let nt = inst.swaps.len();
    let nq = inst.n_queues();
    let total = floor_u64(inst.ebit_supply.iter().sum());
    let mut swap_ub = vec![total; nt];
    let reach = |swap_ub: &[u64]| {
        let mut reach = inst.ebit_supply.clone();
        for (col, &ub) in inst.swaps.iter().zip(swap_ub) {
            reach[col.produces] += ub as f64;
        }
        reach
    };
    loop {
        let r = reach(&swap_ub);
        let mut changed = false;
        for (t, col) in inst.swaps.iter().enumerate() {
            let ub = floor_u64(r[col.consumes[0]])
                .min(floor_u64(r[col.consumes[1]]))
                .min(swap_ub[t]);
            if ub != swap_ub[t] {
                swap_ub[t] = ub;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let r = reach(&swap_ub);
    let mut bounds = swap_ub;
    bounds.extend((0..nq).map(|e| floor_u64(r[e]).min(floor_u64(inst.demand_supply[e])).min(total)));
    bounds
}

fn floor_u64(x: f64) -> u64 {
    // Supplies built from integer counts can land a hair under an integer.
    (x + FEAS_TOL).floor().max(0.0) as u64
}

/// Exact optimum with default options.
pub fn solve(inst: &IlpInstance) -> Result<Decision> {
    Ok(Decision {
        r: solve_with(inst, &SolverOptions::default())?.r,
    })
}

pub fn solve_with(inst: &IlpInstance, opts: &SolverOptions) -> Result<Solution> {
    inst.validate()?;
    let dim = inst.dim();
    let nt = inst.swaps.len();
    let ub = upper_bounds(inst);

    // Variables pinned to zero in the lexicographically smallest optimum:
    // those with a zero bound, consumptions with w >= 0, and swaps with
    // w >= 0 whose output nothing active draws on.
    let mut active: Vec<bool> = ub.iter().map(|&u| u > 0).collect();
    for e in 0..inst.n_queues() {
        if inst.weights[nt + e] >= 0.0 {
            active[nt + e] = false;
        }
    }
    loop {
        let mut changed = false;
        for t in 0..nt {
            if !active[t] || inst.weights[t] < 0.0 {
                continue;
            }
            let out = inst.swaps[t].produces;
            let drawn = active[nt + out]
                || inst
                    .swaps
                    .iter()
                    .enumerate()
                    .any(|(k, c)| active[k] && c.consumes.contains(&out));
            if !drawn {
                active[t] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let vars: Vec<usize> = (0..dim).filter(|&v| active[v]).collect();
    if vars.iter().all(|&v| inst.weights[v] >= 0.0) {
        return Ok(Solution {
            r: vec![0; dim],
            objective: 0.0,
            nodes: 0,
        });
    }

    let problem = Problem::new(inst, &vars, &ub);
    let mut search = Search {
        problem: &problem,
        budget: opts.node_budget,
        nodes: 0,
        lp: Simplex::new(&problem),
    };
    let n = problem.n;
    let lo = vec![0.0; n];
    let hi: Vec<f64> = problem.ub.clone();
    let (mut best, z_star, unique) = search.optimize(lo, hi)?;

    if !unique {
        for k in 0..n {
            while best[k] > 0 {
                let mut lo = vec![0.0; n];
                let mut hi = problem.ub.clone();
                for j in 0..k {
                    lo[j] = best[j] as f64;
                    hi[j] = best[j] as f64;
                }
                hi[k] = (best[k] - 1) as f64;
                match search.find_at_most(lo, hi, z_star)? {
                    Some(x) => best = x,
                    None => break,
                }
            }
        }
    }

    let mut r = vec![0u64; dim];
    for (k, &v) in vars.iter().enumerate() {
        r[v] = best[k];
    }
    debug_assert!(inst.is_feasible(&r));
    Ok(Solution {
        objective: inst.objective(&r),
        r,
        nodes: search.nodes,
    })
}

/// The reduced program over active variables: `A x <= b`, `0 <= x <= ub`.
struct Problem {
    m: usize,
    n: usize,
    /// Row-major `m x n`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    ub: Vec<f64>,
}

impl Problem {
    fn new(inst: &IlpInstance, vars: &[usize], ub: &[u64]) -> Self {
        let nt = inst.swaps.len();
        let mut rows: Vec<usize> = Vec::new();
        let touch = |q: usize, rows: &mut Vec<usize>| {
            if !rows.contains(&q) {
                rows.push(q);
            }
        };
        for &v in vars {
            if v < nt {
                let col = inst.swaps[v];
                touch(col.consumes[0], &mut rows);
                touch(col.consumes[1], &mut rows);
                touch(col.produces, &mut rows);
            } else {
                touch(v - nt, &mut rows);
            }
        }
        rows.sort_unstable();
        let (m, n) = (rows.len(), vars.len());
        let row_of = |q: usize| rows.binary_search(&q).expect("row registered");
        let mut a = vec![0.0; m * n];
        for (k, &v) in vars.iter().enumerate() {
            if v < nt {
                let col = inst.swaps[v];
                a[row_of(col.consumes[0]) * n + k] += 1.0;
                a[row_of(col.consumes[1]) * n + k] += 1.0;
                a[row_of(col.produces) * n + k] -= 1.0;
            } else {
                a[row_of(v - nt) * n + k] += 1.0;
            }
        }
        Problem {
            m,
            n,
            a,
            // Rows have integer coefficients, so flooring the supply loses
            // no integer point and tightens the relaxation.
            b: rows.iter().map(|&q| (inst.ebit_supply[q] + FEAS_TOL).floor()).collect(),
            c: vars.iter().map(|&v| inst.weights[v]).collect(),
            ub: vars.iter().map(|&v| ub[v] as f64).collect(),
        }
    }

    fn objective(&self, x: &[u64]) -> f64 {
        self.c.iter().zip(x).map(|(c, &v)| c * v as f64).sum()
    }

    fn feasible(&self, x: &[u64]) -> bool {
        (0..self.m).all(|i| {
            let lhs: f64 = (0..self.n).map(|j| self.a[i * self.n + j] * x[j] as f64).sum();
            lhs <= self.b[i] + FEAS_TOL
        })
    }
}

/// Integer point and its objective value.
type Incumbent = (Vec<u64>, f64);

struct Search<'p> {
    problem: &'p Problem,
    budget: usize,
    nodes: usize,
    lp: Simplex,
}

enum Goal {
    Optimize,
    /// Any integer point with objective at most this value.
    AtMost(f64),
}

impl Search<'_> {
    /// Returns (optimum, objective, whether the optimum is provably unique).
    fn optimize(&mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<(Vec<u64>, f64, bool)> {
        let zero = vec![0u64; self.problem.n];
        let incumbent = (zero, 0.0);
        let (best, unique) = self.run(lo, hi, Goal::Optimize, Some(incumbent))?;
        let (x, z) = best.expect("zero is always feasible");
        Ok((x, z, unique))
    }

    fn find_at_most(&mut self, lo: Vec<f64>, hi: Vec<f64>, target: f64) -> Result<Option<Vec<u64>>> {
        let (found, _) = self.run(lo, hi, Goal::AtMost(target), None)?;
        Ok(found.map(|(x, _)| x))
    }

    /// Returns the best point found and whether it is certified unique.
    fn run(
        &mut self,
        lo: Vec<f64>,
        hi: Vec<f64>,
        goal: Goal,
        mut best: Option<Incumbent>,
    ) -> Result<(Option<Incumbent>, bool)> {
        let p = self.problem;
        let mut stack = vec![(lo, hi)];
        // Smallest LP bound over every closed subtree other than the one
        // holding the incumbent. The optimum is unique when this stays above
        // it and the incumbent's own LP optimum is unique.
        let mut closed_min = f64::INFINITY;
        let mut incumbent_unique = false;
        while let Some((lo, hi)) = stack.pop() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::SolverBudget(self.budget));
            }
            let Some(sol) = self.lp.solve(p, &lo, &hi)? else {
                continue;
            };
            let prune = match goal {
                Goal::Optimize => best.as_ref().is_some_and(|(_, z)| sol.objective >= z - OBJ_TOL),
                Goal::AtMost(target) => sol.objective > target + OBJ_TOL,
            };
            if prune {
                closed_min = closed_min.min(sol.objective);
                continue;
            }
            let frac = sol.x.iter().position(|v| (v - v.round()).abs() > INT_TOL);
            match frac {
                None => {
                    let x: Vec<u64> = sol.x.iter().map(|v| v.round().max(0.0) as u64).collect();
                    if !p.feasible(&x) {
                        closed_min = f64::NEG_INFINITY;
                        continue;
                    }
                    let z = p.objective(&x);
                    match goal {
                        Goal::AtMost(target) => {
                            if z <= target + OBJ_TOL {
                                return Ok((Some((x, z)), false));
                            }
                        }
                        Goal::Optimize => {
                            if best.as_ref().is_none_or(|(_, bz)| z < bz - OBJ_TOL) {
                                if let Some((_, bz)) = &best {
                                    closed_min = closed_min.min(*bz);
                                }
                                incumbent_unique = sol.dual_nondegenerate;
                                best = Some((x, z));
                            } else {
                                closed_min = closed_min.min(sol.objective);
                            }
                        }
                    }
                }
                Some(k) => {
                    let v = sol.x[k];
                    let (mut down_hi, mut up_lo) = (hi.clone(), lo.clone());
                    down_hi[k] = v.floor();
                    up_lo[k] = v.ceil();
                    let down = (lo, down_hi);
                    let up = (up_lo, hi);
                    if v - v.floor() >= 0.5 {
                        stack.push(down);
                        stack.push(up);
                    } else {
                        stack.push(up);
                        stack.push(down);
                    }
                }
            }
        }
        let unique = incumbent_unique && best.as_ref().is_some_and(|(_, z)| closed_min > z + OBJ_TOL);
        Ok((best, unique))
    }
}

struct LpSolution {
    x: Vec<f64>,
    objective: f64,
    /// No nonbasic column has a zero reduced cost, so the optimum is unique.
    dual_nondegenerate: bool,
}

/// Dense bounded-variable primal simplex over `A x + s = b`, `lo <= x <= hi`,
/// `s >= 0`, with artificial columns for rows that start infeasible.
struct Simplex {
    tab: Vec<f64>,
    x_basic: Vec<f64>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    width: usize,
}

impl Simplex {
    fn new(p: &Problem) -> Self {
        let width = p.n + 2 * p.m;
        Simplex {
            tab: vec![0.0; p.m * width],
            x_basic: vec![0.0; p.m],
            basis: vec![0; p.m],
            at_upper: vec![false; width],
            is_basic: vec![false; width],
            lo: vec![0.0; width],
            hi: vec![0.0; width],
            cost: vec![0.0; width],
            reduced: vec![0.0; width],
            width,
        }
    }

    fn solve(&mut self, p: &Problem, lo: &[f64], hi: &[f64]) -> Result<Option<LpSolution>> {
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Ok(None);
        }
        let (m, n, w) = (p.m, p.n, self.width);
        self.tab.fill(0.0);
        self.at_upper.fill(false);
        self.is_basic.fill(false);
        self.lo[..n].copy_from_slice(lo);
        self.hi[..n].copy_from_slice(hi);
        for j in n..w {
            self.lo[j] = 0.0;
            self.hi[j] = f64::INFINITY;
        }
        let mut any_artificial = false;
        for i in 0..m {
            let row = &p.a[i * n..(i + 1) * n];
            let resid = p.b[i] - row.iter().zip(lo).map(|(a, l)| a * l).sum::<f64>();
            let t = &mut self.tab[i * w..(i + 1) * w];
            let art = n + m + i;
            if resid >= -FEAS_TOL {
                t[..n].copy_from_slice(row);
                t[n + i] = 1.0;
                self.basis[i] = n + i;
                self.x_basic[i] = resid.max(0.0);
                // Unused artificial: pinned at zero.
                self.hi[art] = 0.0;
            } else {
                for (tj, aj) in t[..n].iter_mut().zip(row) {
                    *tj = -aj;
                }
                t[n + i] = -1.0;
                t[art] = 1.0;
                self.basis[i] = art;
                self.x_basic[i] = -resid;
                any_artificial = true;
            }
            self.is_basic[self.basis[i]] = true;
        }

        if any_artificial {
            self.cost.fill(0.0);
            for i in 0..m {
                self.cost[n + m + i] = 1.0;
            }
            self.iterate(m)?;
            let infeas: f64 = (0..m)
                .filter(|&i| self.basis[i] >= n + m)
                .map(|i| self.x_basic[i])
                .sum();
            if infeas > 1e-7 {
                return Ok(None);
            }
            for j in n + m..w {
                self.hi[j] = 0.0;
            }
        }

        self.cost.fill(0.0);
        self.cost[..n].copy_from_slice(&p.c);
        self.iterate(m)?;

        let mut x: Vec<f64> = (0..n)
            .map(|j| if self.at_upper[j] { self.hi[j] } else { self.lo[j] })
            .collect();
        for i in 0..m {
            if self.basis[i] < n {
                x[self.basis[i]] = self.x_basic[i];
            }
        }
        let dual_nondegenerate =
            (0..w).all(|j| self.is_basic[j] || self.hi[j] - self.lo[j] <= FEAS_TOL || self.reduced[j].abs() > 1e-9);
        let objective = p.c.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Some(LpSolution {
            x,
            objective,
            dual_nondegenerate,
        }))
    }

    fn iterate(&mut self, m: usize) -> Result<()> {
        let w = self.width;
        for j in 0..w {
            let mut d = self.cost[j];
            for i in 0..m {
                let t = self.tab[i * w + j];
                if t != 0.0 {
                    d -= self.cost[self.basis[i]] * t;
                }
            }
            self.reduced[j] = d;
        }
        let mut degenerate = 0usize;
        for _ in 0..10_000 {
            let bland = degenerate > 20;
            // Entering column.
            let mut enter = None;
            let mut best_score = 1e-9;
            for j in 0..w {
                if self.is_basic[j] || self.hi[j] - self.lo[j] <= FEAS_TOL {
                    continue;
                }
                let d = self.reduced[j];
                let score = if self.at_upper[j] { d } else { -d };
                if score > best_score {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best_score = score;
                }
            }
            let Some(q) = enter else {
                return Ok(());
            };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            // Ratio test; `None` leaving row means a bound flip.
            let mut theta = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..m {
                let alpha = self.tab[i * w + q] * dir;
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > FEAS_TOL {
                    (((self.x_basic[i] - self.lo[b]) / alpha).max(0.0), false)
                } else if alpha < -FEAS_TOL && self.hi[b].is_finite() {
                    (((self.hi[b] - self.x_basic[i]) / -alpha).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit < theta - FEAS_TOL => true,
                    Some((r, _)) if limit <= theta + FEAS_TOL => bland && b < self.basis[r],
                    _ => false,
                };
                if better {
                    theta = limit;
                    leave = Some((i, to_upper));
                }
            }
            if !theta.is_finite() {
                return Err(Error::Argument("unbounded relaxation".into()));
            }
            degenerate = if theta <= FEAS_TOL { degenerate + 1 } else { 0 };

            for i in 0..m {
                let t = self.tab[i * w + q];
                if t != 0.0 {
                    self.x_basic[i] -= theta * dir * t;
                }
            }
            match leave {
                None => self.at_upper[q] = !self.at_upper[q],
                Some((r, to_upper)) => {
                    let start = if self.at_upper[q] { self.hi[q] } else { self.lo[q] };
                    let out = self.basis[r];
                    self.pivot(m, r, q);
                    self.x_basic[r] = start + dir * theta;
                    self.basis[r] = q;
                    self.is_basic[q] = true;
                    self.is_basic[out] = false;
                    self.at_upper[q] = false;
                    self.at_upper[out] = to_upper;
                }
            }
        }
        Err(Error::Argument("simplex iteration limit reached".into()))
    }

    fn pivot(&mut self, m: usize, r: usize, q: usize) {
        let w = self.width;
        let piv = self.tab[r * w + q];
        for v in &mut self.tab[r * w..(r + 1) * w] {
            *v /= piv;
        }
        let (before, rest) = self.tab.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[q];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(prow.iter()) {
                *d -= f * p;
            }
        }
        debug_assert!(m > r);
    }
}
