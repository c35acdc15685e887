//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs the three bottleneck sweeps once and shares them.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use common::{brute_force, random_columns};
use qsched::dynamics::{
    advance, availability, demand_balance, total_ebit_balance, Decision, NetworkState, StepObservation,
};
use qsched::harness::region::{
    diagonal_edge, dominance_violations, edge_beta1, edge_beta2, edge_slope, monotonicity_violations, servable_cells,
    LOW_UNSERVED, NOISE_TOLERANCE,
};
use qsched::harness::{run_sweep, write_csv, GridAxis, Metric, RateGrid, SimConfig, Simulation, SweepSpec};
use qsched::ilp::{solve_with, IlpInstance, SolverOptions};
use qsched::stochastic::{sample_losses, sample_poisson, RandomSource};
use qsched::topology::{build_transition_system, NetworkSpec, TransitionSystem};
use qsched::PolicyKind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative band around each reference rate-region value.
const REGION_TOL: f64 = 0.15;
const GREEDY_EDGE: f64 = 0.30;
const GLOBAL_EDGE: f64 = 0.60;
const GLOBAL_DIAGONAL: f64 = 0.80;
const LOCAL_EDGE: f64 = 0.55;
const LOCAL_DIAGONAL: f64 = 0.70;

const GRID_MAX: f64 = 0.9;
const GRID_COUNT: usize = 11;
const GRID_STEP: f64 = GRID_MAX / (GRID_COUNT - 1) as f64;
const SWEEP_SEED: u64 = 1;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(x: Option<f64>, target: f64) -> bool {
    x.is_some_and(|x| (x - target).abs() <= REGION_TOL * target)
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("none".into(), |x| format!("{x:.3}"))
}

fn by_label(ts: &TransitionSystem, entries: &[(&str, u64)]) -> Vec<u64> {
    let mut v = vec![0; ts.n_queues()];
    for &(label, x) in entries {
        let (a, b) = label.split_at(1);
        v[ts.queue_id(a, b).unwrap()] = x;
    }
    v
}

fn matrix_golden() -> Outcome {
    let start = Instant::now();
    let ts = build_transition_system(&NetworkSpec::chain(&["A", "B", "C", "D"], 1.0)).map_err(|e| e.to_string())?;
    let queues: Vec<_> = (0..ts.n_queues()).map(|q| ts.queue_label(q)).collect();
    let swaps: Vec<_> = (0..ts.n_transitions()).map(|t| ts.transition_label(t)).collect();
    if queues != ["AB", "BC", "CD", "AC", "BD", "AD"] || swaps != ["A[B]C", "B[C]D", "A[B]D", "A[C]D"] {
        return Err(format!("layout {queues:?} {swaps:?}"));
    }
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
        if &ts.m_tilde().row(q)[..4] != row {
            return Err(format!("row {} differs", queues[q]));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut columns = 0;
    for case in 0..50 {
        let spec = random_topology(&mut rng);
        let ts = build_transition_system(&spec).map_err(|e| format!("topology {case}: {e}"))?;
        for c in 0..ts.dim() {
            if ts.m_tilde().column_sum(c) != -1 {
                return Err(format!(
                    "topology {case}: column {} sums to {}",
                    ts.variable_label(c),
                    ts.m_tilde().column_sum(c)
                ));
            }
        }
        columns += ts.dim();
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 1.0,
        format!("table layout exact, {columns} columns over 50 topologies, {secs:.3}s"),
    )
}

/// Two to four random simple paths over up to eight nodes, with a user on
/// each distinct endpoint pair.
fn random_topology(rng: &mut ChaCha8Rng) -> NetworkSpec {
    let names: Vec<String> = (0..8).map(|i| ((b'A' + i) as char).to_string()).collect();
    let mut spec = NetworkSpec::new(&names);
    let mut edges = std::collections::BTreeSet::new();
    let mut users = std::collections::BTreeSet::new();
    for _ in 0..rng.random_range(2..=4) {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.shuffle(rng);
        let path: Vec<&str> = order[..rng.random_range(3..=6)]
            .iter()
            .map(|&i| names[i].as_str())
            .collect();
        for w in path.windows(2) {
            let key = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            if edges.insert(key) {
                spec = spec.edge(w[0], w[1], 1.0);
            }
        }
        spec = spec.route(&path);
        let (a, b) = (path[0], path[path.len() - 1]);
        if users.insert(if a < b { (a, b) } else { (b, a) }) {
            spec = spec.user(a, b, 0.1);
        }
    }
    spec
}

fn walkthrough() -> Outcome {
    let ts =
        build_transition_system(&NetworkSpec::chain(&["A", "B", "C", "D"], 1.0).eta(0.9)).map_err(|e| e.to_string())?;
    let swap = |l, m, r| {
        let mut d = Decision::zero(ts.dim());
        d.r[ts.transition_id(l, m, r).unwrap()] = 1;
        d
    };
    let mut state = NetworkState::with_ebits(by_label(&ts, &[("AB", 1), ("CD", 1)]));
    let obs0 = StepObservation {
        arrivals: by_label(&ts, &[("AB", 2), ("BC", 1)]),
        losses: by_label(&ts, &[("CD", 1)]),
        demand_arrivals: vec![0; ts.n_queues()],
    };
    advance(&mut state, &ts, &obs0, &swap("A", "B", "C")).map_err(|e| e.to_string())?;
    if state.q != by_label(&ts, &[("AB", 2), ("AC", 1)]) {
        return Err(format!("after step 0: {:?}", state.q));
    }
    let obs1 = StepObservation {
        arrivals: by_label(&ts, &[("CD", 1)]),
        losses: by_label(&ts, &[("AB", 1)]),
        demand_arrivals: vec![0; ts.n_queues()],
    };
    if availability(&state, &obs1).ebits != by_label(&ts, &[("AB", 1), ("AC", 1), ("CD", 1)]) {
        return Err("step 1 availability".into());
    }
    advance(&mut state, &ts, &obs1, &swap("A", "C", "D")).map_err(|e| e.to_string())?;
    check(
        state.q == by_label(&ts, &[("AB", 1), ("AD", 1)]) && total_ebit_balance(&state) == 0,
        format!("q_AB(1)=2, q_AC(1)=1, then AB=1, AD=1 after A[C]D; final {:?}", state.q),
    )
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let opts = SolverOptions::default();
    let instances = 120;
    for case in 0..instances {
        let nq = rng.random_range(3..=6);
        let nt = rng.random_range(1..=(12 - nq).min(6));
        let swaps = random_columns(&mut rng, nq, nt);
        let inst = IlpInstance {
            swaps: &swaps,
            weights: (0..nt + nq).map(|_| rng.random_range(-6..=4) as f64).collect(),
            ebit_supply: (0..nq).map(|_| rng.random_range(0..=4) as f64).collect(),
            demand_supply: (0..nq).map(|_| rng.random_range(0..=4) as f64).collect(),
        };
        let got = solve_with(&inst, &opts).map_err(|e| format!("case {case}: {e}"))?;
        let (z, _) = brute_force(&inst);
        if !inst.is_feasible(&got.r) || got.objective != z {
            return Err(format!("case {case}: {} vs exhaustive {z}", got.objective));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 30.0, format!("{instances} instances exact, {secs:.2}s"))
}

fn stochastic_calibration() -> Outcome {
    const DRAWS: usize = 1_000_000;
    let mut rng = RandomSource::new(101);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for alpha in [0.3, 1.0, 2.5] {
        let sum: u64 = (0..DRAWS).map(|_| sample_poisson(&mut rng, alpha).unwrap()).sum();
        worst.0 = worst.0.max((sum as f64 / DRAWS as f64 - alpha).abs() / alpha);
    }
    for (stored, eta) in [(1u64, 0.9), (10, 0.9), (37, 0.75)] {
        let sum: u64 = (0..DRAWS).map(|_| sample_losses(&mut rng, stored, eta).unwrap()).sum();
        let expected = (1.0 - eta) * stored as f64;
        worst.1 = worst.1.max((sum as f64 / DRAWS as f64 - expected).abs() / expected);
    }
    let lives = 200_000;
    let mut total = 0u64;
    for _ in 0..lives {
        let mut steps = 1;
        while sample_losses(&mut rng, 1, 0.9).unwrap() == 0 {
            steps += 1;
        }
        total += steps;
    }
    worst.2 = (total as f64 / lives as f64 - 10.0).abs() / 10.0;
    check(
        worst.0 < 0.01 && worst.1 < 0.02 && worst.2 < 0.02,
        format!(
            "poisson {:.3}%, loss {:.3}%, lifetime {:.3}% worst relative error",
            100.0 * worst.0,
            100.0 * worst.1,
            100.0 * worst.2
        ),
    )
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut steps_checked = 0u64;
    for kind in PolicyKind::ALL {
        for _ in 0..2 {
            let (b1, b2) = (rng.random_range(0.0..0.9), rng.random_range(0.0..0.9));
            let mut cfg = SimConfig::new(NetworkSpec::bottleneck(1.0, 0.9, b1, b2), kind);
            cfg.seed = rng.random();
            let mut sim = Simulation::new(&cfg).map_err(|e| e.to_string())?;
            for _ in 0..cfg.steps {
                sim.step().map_err(|e| format!("{kind}: {e}"))?;
                let s = sim.state();
                if total_ebit_balance(s) != 0 || demand_balance(s) != 0 {
                    return Err(format!("{kind} ({b1:.2}, {b2:.2}) t={}", s.t));
                }
                steps_checked += 1;
            }
        }
    }
    Ok(format!("{steps_checked} steps balanced across all policies"))
}

struct Regions {
    greedy: RateGrid,
    global: RateGrid,
    local: RateGrid,
}

fn sweep_grid(kind: PolicyKind) -> RateGrid {
    let axis = GridAxis::new(0.0, GRID_MAX, GRID_COUNT);
    let sweep = SweepSpec::new([("A", "E"), ("B", "F")], axis, axis, SWEEP_SEED);
    let base = SimConfig::new(NetworkSpec::bottleneck(1.0, 0.9, 0.0, 0.0), kind);
    let result = run_sweep(&sweep, &base, None).expect("sweep runs");
    assert!(result.failures.is_empty(), "{kind}: {:?}", result.failures);
    result.grid(Metric::Max)
}

fn regions() -> &'static Regions {
    static REGIONS: OnceLock<Regions> = OnceLock::new();
    REGIONS.get_or_init(|| Regions {
        greedy: sweep_grid(PolicyKind::Greedy),
        global: sweep_grid(PolicyKind::GlobalMw),
        local: sweep_grid(PolicyKind::LocalMw),
    })
}

fn greedy_region() -> Outcome {
    let g = &regions().greedy;
    let (e1, e2) = (edge_beta1(g, LOW_UNSERVED), edge_beta2(g, LOW_UNSERVED));
    check(
        within(e1, GREEDY_EDGE) && within(e2, GREEDY_EDGE),
        format!("edges {} / {} vs {GREEDY_EDGE} +-15%", fmt(e1), fmt(e2)),
    )
}

fn global_region() -> Outcome {
    let g = &regions().global;
    let (e1, e2, diag) = (
        edge_beta1(g, LOW_UNSERVED),
        edge_beta2(g, LOW_UNSERVED),
        diagonal_edge(g, LOW_UNSERVED),
    );
    // Fit the rows that cross the cut corner, at least one cell clear of
    // either end of it.
    let (lo, hi) = match (e1, e2, diag) {
        (Some(e1), Some(e2), Some(d)) => (d - e1.min(e2) + GRID_STEP, e1.min(e2) - GRID_STEP),
        _ => (1.0, 0.0),
    };
    let rows: Vec<usize> = (0..GRID_COUNT)
        .filter(|&i| (lo..=hi).contains(&(i as f64 * GRID_STEP)))
        .collect();
    let slope = edge_slope(g, rows.iter().copied(), LOW_UNSERVED);
    let span = rows.len().saturating_sub(1) as f64 * GRID_STEP;
    // Parallel when the fitted edge drifts from a slope of -1 by less than
    // one cell over the fitted span.
    let parallel = slope.is_some_and(|s| (s + 1.0).abs() * span <= GRID_STEP);
    check(
        within(e1, GLOBAL_EDGE) && within(e2, GLOBAL_EDGE) && within(diag, GLOBAL_DIAGONAL) && parallel,
        format!(
            "edges {} / {} vs {GLOBAL_EDGE}, diagonal {} vs {GLOBAL_DIAGONAL}, slope {} over {} rows",
            fmt(e1),
            fmt(e2),
            fmt(diag),
            fmt(slope),
            rows.len()
        ),
    )
}

fn local_region() -> Outcome {
    let r = regions();
    let l = &r.local;
    let (e1, e2, diag) = (
        edge_beta1(l, LOW_UNSERVED),
        edge_beta2(l, LOW_UNSERVED),
        diagonal_edge(l, LOW_UNSERVED),
    );
    let over_greedy = dominance_violations(l, &r.greedy, NOISE_TOLERANCE);
    let under_global = dominance_violations(&r.global, l, NOISE_TOLERANCE);
    let (nl, ng) = (
        servable_cells(l, LOW_UNSERVED).len(),
        servable_cells(&r.greedy, LOW_UNSERVED).len(),
    );
    check(
        within(e1, LOCAL_EDGE)
            && within(e2, LOCAL_EDGE)
            && within(diag, LOCAL_DIAGONAL)
            && over_greedy.is_empty()
            && under_global.is_empty()
            && nl > ng,
        format!(
            "edges {} / {} vs {LOCAL_EDGE}, diagonal {} vs {LOCAL_DIAGONAL}, servable {nl} vs greedy {ng}, \
             worse than greedy at {over_greedy:?}, global worse at {under_global:?}",
            fmt(e1),
            fmt(e2),
            fmt(diag)
        ),
    )
}

fn policy_ordering() -> Outcome {
    let r = regions();
    let interior = |cells: Vec<(usize, usize)>| -> Vec<(usize, usize)> {
        cells
            .into_iter()
            .filter(|&(i, j)| (1..GRID_COUNT - 1).contains(&i) && (1..GRID_COUNT - 1).contains(&j))
            .collect()
    };
    let global_local = interior(dominance_violations(&r.global, &r.local, NOISE_TOLERANCE));
    let local_greedy = interior(dominance_violations(&r.local, &r.greedy, NOISE_TOLERANCE));
    let mono: Vec<_> = [("greedy", &r.greedy), ("global", &r.global), ("local", &r.local)]
        .into_iter()
        .map(|(name, g)| (name, monotonicity_violations(g, NOISE_TOLERANCE)))
        .filter(|(_, v)| !v.is_empty())
        .collect();
    check(
        global_local.is_empty() && local_greedy.is_empty() && mono.is_empty(),
        format!("ordering breaks: global>local {global_local:?}, local>greedy {local_greedy:?}; non-monotone {mono:?}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let axis = GridAxis::new(0.2, 0.6, 3);
    let sweep = SweepSpec::new([("A", "E"), ("B", "F")], axis, axis, 42);
    let mut outputs = Vec::new();
    for kind in PolicyKind::ALL {
        let mut base = SimConfig::new(NetworkSpec::bottleneck(1.0, 0.9, 0.0, 0.0), kind);
        base.steps = 1000;
        for (run, workers) in [1, 1, 4].into_iter().enumerate() {
            let path = dir.path().join(format!("{kind}-{run}.csv"));
            let result = run_sweep(&sweep, &base, Some(workers)).map_err(|e| e.to_string())?;
            write_csv(&result, &path).map_err(|e| e.to_string())?;
            outputs.push((kind, std::fs::read(&path).map_err(|e| e.to_string())?));
        }
    }
    let differing: Vec<String> = outputs
        .chunks(3)
        .filter(|c| c[0].1 != c[1].1 || c[0].1 != c[2].1)
        .map(|c| c[0].0.to_string())
        .collect();
    check(
        differing.is_empty(),
        format!("CSV bytes identical across repeat runs and 1 vs 4 workers; differing: {differing:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("matrix golden", matrix_golden),
        ("two-step walkthrough", walkthrough),
        ("solver oracle", solver_oracle),
        ("stochastic calibration", stochastic_calibration),
        ("conservation", conservation),
        ("greedy rate region", greedy_region),
        ("global max-weight rate region", global_region),
        ("local max-weight rate region", local_region),
        ("policy ordering", policy_ordering),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
