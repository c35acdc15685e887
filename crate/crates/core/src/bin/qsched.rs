use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qsched::harness::{
    capacity_bound, load_config, render_heatmap, run_simulation_traced, run_sweep, write_csv, Experiment,
    HeatmapOptions, Metric, FULL_SCALE_STEPS,
};
use qsched::topology::build_transition_system;

#[derive(Parser)]
#[command(name = "qsched", version, about = "Entanglement-distribution scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Experiment file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the number of steps.
    #[arg(long)]
    steps: Option<u64>,
    /// Overrides the seed (and the sweep base seed).
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn load(&self) -> Result<Experiment> {
        let mut exp = load_config(&self.config)?;
        if let Some(steps) = self.steps {
            exp.sim.steps = steps;
        }
        if let Some(seed) = self.seed {
            exp.sim.seed = seed;
            if let Some(sweep) = exp.sweep.as_mut() {
                sweep.base_seed = seed;
            }
        }
        exp.sim.validate()?;
        Ok(exp)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Runs one simulation and prints its report as JSON.
    Simulate {
        #[command(flatten)]
        common: Overrides,
        /// Writes a per-step CSV trace of q, d and r.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Runs the rate-region sweep of the config file.
    Sweep {
        #[command(flatten)]
        common: Overrides,
        /// CSV file for the per-point results
        #[arg(long)]
        out: PathBuf,
        /// Also renders a heatmap image (format from the extension).
        #[arg(long)]
        heatmap: Option<PathBuf>,
        /// Metric shown in the heatmap: unserved1, unserved2 or max.
        #[arg(long, default_value = "max")]
        metric: Metric,
        /// Worker threads (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Uses the full-scale step count unless --steps is given.
        #[arg(long)]
        full_scale: bool,
    },
    /// Prints queues, transitions, ranks and the update matrices.
    Matrix {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { common, trace } => {
            let exp = common.load()?;
            let report = match trace {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    let mut out = BufWriter::new(file);
                    let report = run_simulation_traced(&exp.sim, Some(&mut out))?;
                    out.flush().with_context(|| format!("writing {}", path.display()))?;
                    report
                }
                None => run_simulation_traced(&exp.sim, None)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Sweep {
            common,
            out,
            heatmap,
            metric,
            workers,
            full_scale,
        } => {
            let mut exp = common.load()?;
            if full_scale && common.steps.is_none() {
                exp.sim.steps = FULL_SCALE_STEPS;
            }
            let Some(sweep) = exp.sweep else {
                bail!("{} has no `sweep` section", common.config.display());
            };
            let result = run_sweep(&sweep, &exp.sim, workers)?;
            for f in &result.failures {
                eprintln!(
                    "point beta1={} beta2={} replication={} failed: {}",
                    f.beta1, f.beta2, f.replication, f.error
                );
            }
            write_csv(&result, &out)?;
            if let Some(path) = heatmap {
                let opts = HeatmapOptions {
                    bound: capacity_bound(&exp.sim.spec, &sweep.axes),
                    ..HeatmapOptions::default()
                };
                render_heatmap(&result, &path, metric, &opts)?;
            }
            if !result.failures.is_empty() {
                bail!(
                    "{} of {} runs failed",
                    result.failures.len(),
                    result.failures.len() + result.records.len()
                );
            }
        }
        Command::Matrix { config } => {
            let exp = load_config(&config)?;
            print!("{}", build_transition_system(&exp.sim.spec)?);
        }
    }
    Ok(())
}
