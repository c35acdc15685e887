use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_simulation, unserved_fraction, RunReport, SimConfig};
use crate::error::{Error, Result};
use crate::topology::{build_transition_system, NetworkSpec, NodePair};

/// Evenly spaced demand rates, inclusive of both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        GridAxis { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config(format!("{name}: grid count must be >= 1")));
        }
        if !(self.min >= 0.0 && self.min <= self.max && self.max.is_finite()) {
            return Err(Error::Config(format!(
                "{name}: need 0 <= min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Rate-region sweep over the demand rates of two user pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axes: [(String, String); 2],
    pub beta1: GridAxis,
    pub beta2: GridAxis,
    pub base_seed: u64,
    pub replications: usize,
}

impl SweepSpec {
    pub fn new(axes: [(&str, &str); 2], beta1: GridAxis, beta2: GridAxis, base_seed: u64) -> Self {
        SweepSpec {
            axes: axes.map(|(a, b)| (a.to_string(), b.to_string())),
            beta1,
            beta2,
            base_seed,
            replications: 1,
        }
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        self.beta1.validate("beta1")?;
        self.beta2.validate("beta2")?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        let same = |(a, b): &(String, String), (c, d): &(String, String)| (a == c && b == d) || (a == d && b == c);
        if same(&self.axes[0], &self.axes[1]) {
            return Err(Error::Config("sweep axes must be two different user pairs".into()));
        }
        for (a, b) in &self.axes {
            let known = spec
                .users
                .iter()
                .any(|u| same(&(u.a.clone(), u.b.clone()), &(a.clone(), b.clone())));
            if !known {
                return Err(Error::Config(format!("sweep axis ({a}, {b}) is not a user pair")));
            }
        }
        Ok(())
    }
}

/// One run of a sweep; the fields are the CSV columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub beta1: f64,
    pub beta2: f64,
    pub replication: usize,
    pub seed: u64,
    pub unserved1: f64,
    pub unserved2: f64,
    pub served1: u64,
    pub arrived1: u64,
    pub served2: u64,
    pub arrived2: u64,
    pub final_q_total: u64,
    pub final_d_total: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepFailure {
    pub beta1: f64,
    pub beta2: f64,
    pub replication: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepResult {
    /// Ordered by beta1 index, then beta2 index, then replication.
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Unserved1,
    Unserved2,
    /// Worse of the two commodities.
    Max,
}

impl Metric {
    fn of(&self, r: &SweepRecord) -> f64 {
        match self {
            Metric::Unserved1 => r.unserved1,
            Metric::Unserved2 => r.unserved2,
            Metric::Max => r.unserved1.max(r.unserved2),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unserved1" => Ok(Metric::Unserved1),
            "unserved2" => Ok(Metric::Unserved2),
            "max" => Ok(Metric::Max),
            other => Err(Error::Config(format!(
                "unknown metric `{other}` (unserved1, unserved2, max)"
            ))),
        }
    }
}

/// Per-point means of one metric over replications.
#[derive(Clone, Debug, PartialEq)]
pub struct RateGrid {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    /// `values[i1 * beta2.len() + i2]`; NaN where every run failed.
    pub values: Vec<f64>,
}

impl RateGrid {
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.beta2.len() + i2]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.beta1.len(), self.beta2.len())
    }
}

impl SweepResult {
    pub fn grid(&self, metric: Metric) -> RateGrid {
        let distinct = |f: fn(&SweepRecord) -> f64| -> Vec<f64> {
            let set: BTreeSet<u64> = self.records.iter().map(|r| f(r).to_bits()).collect();
            let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let beta1 = distinct(|r| r.beta1);
        let beta2 = distinct(|r| r.beta2);
        let n2 = beta2.len();
        let mut sums = vec![0.0; beta1.len() * n2];
        let mut counts = vec![0usize; beta1.len() * n2];
        for r in &self.records {
            let i1 = beta1.iter().position(|&b| b == r.beta1).expect("collected");
            let i2 = beta2.iter().position(|&b| b == r.beta2).expect("collected");
            sums[i1 * n2 + i2] += metric.of(r);
            counts[i1 * n2 + i2] += 1;
        }
        let values = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
            .collect();
        RateGrid { beta1, beta2, values }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one sweep run: the base seed mixed with a hash of the grid
/// index and replication number.
pub fn point_seed(base_seed: u64, grid_index: usize, replication: usize) -> u64 {
    base_seed ^ splitmix64(splitmix64(grid_index as u64) ^ replication as u64)
}

/// Smallest generation rate on a fibered link shared by the routes of both
/// sweep axes: the ideal cumulative-demand bound.
pub fn capacity_bound(spec: &NetworkSpec, axes: &[(String, String); 2]) -> Option<f64> {
    let ts = build_transition_system(spec).ok()?;
    let links_of = |(a, b): &(String, String)| -> BTreeSet<NodePair> {
        spec.routes
            .iter()
            .filter(|r| {
                let (f, l) = (&r[0], &r[r.len() - 1]);
                (f == a && l == b) || (f == b && l == a)
            })
            .flat_map(|r| {
                r.windows(2)
                    .filter_map(|w| Some(NodePair::new(ts.node_id(&w[0]).ok()?, ts.node_id(&w[1]).ok()?)))
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let shared: Vec<NodePair> = links_of(&axes[0]).intersection(&links_of(&axes[1])).copied().collect();
    shared
        .iter()
        .filter_map(|p| ts.queue_of_pair(*p))
        .map(|q| ts.alpha()[q])
        .min_by(f64::total_cmp)
}

struct Job {
    beta1: f64,
    beta2: f64,
    replication: usize,
    seed: u64,
}

/// Runs every grid point (and replication) of `sweep` on top of `base`.
///
/// Points run in parallel on `workers` threads (default: all cores); the
/// result order depends only on the grid.
pub fn run_sweep(sweep: &SweepSpec, base: &SimConfig, workers: Option<usize>) -> Result<SweepResult> {
    sweep.validate(&base.spec)?;
    base.validate()?;
    build_transition_system(&base.spec)?;

    let b1 = sweep.beta1.values();
    let b2 = sweep.beta2.values();
    let mut jobs = Vec::with_capacity(b1.len() * b2.len() * sweep.replications);
    for (i1, &beta1) in b1.iter().enumerate() {
        for (i2, &beta2) in b2.iter().enumerate() {
            let grid_index = i1 * b2.len() + i2;
            for replication in 0..sweep.replications {
                jobs.push(Job {
                    beta1,
                    beta2,
                    replication,
                    seed: point_seed(sweep.base_seed, grid_index, replication),
                });
            }
        }
    }

    let run = |job: &Job| -> Result<SweepRecord> {
        let mut cfg = base.clone();
        let [(a1, b1), (a2, b2)] = &sweep.axes;
        cfg.spec.set_beta(a1, b1, job.beta1)?;
        cfg.spec.set_beta(a2, b2, job.beta2)?;
        cfg.seed = job.seed;
        let report = run_simulation(&cfg)?;
        record_from(job, &report, &sweep.axes)
    };

    // A single worker runs inline, which also keeps threadless targets working.
    let outcomes: Vec<Result<SweepRecord>> = if workers == Some(1) {
        jobs.iter().map(run).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            builder = builder.num_threads(n.max(1));
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };

    let mut result = SweepResult::default();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(rec) => result.records.push(rec),
            Err(e) => result.failures.push(SweepFailure {
                beta1: job.beta1,
                beta2: job.beta2,
                replication: job.replication,
                seed: job.seed,
                error: e.to_string(),
            }),
        }
    }
    Ok(result)
}

fn record_from(job: &Job, report: &RunReport, axes: &[(String, String); 2]) -> Result<SweepRecord> {
    let pair = |(a, b): &(String, String)| {
        report
            .pair(a, b)
            .ok_or_else(|| Error::UnknownQueue(a.clone(), b.clone()))
    };
    let (p1, p2) = (pair(&axes[0])?, pair(&axes[1])?);
    Ok(SweepRecord {
        beta1: job.beta1,
        beta2: job.beta2,
        replication: job.replication,
        seed: job.seed,
        unserved1: unserved_fraction(p1.served, p1.arrived),
        unserved2: unserved_fraction(p2.served, p2.arrived),
        served1: p1.served,
        arrived1: p1.arrived,
        served2: p2.served,
        arrived2: p2.arrived,
        final_q_total: report.final_q_total,
        final_d_total: report.final_d_total,
    })
}
