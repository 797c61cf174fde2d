//! Experiment drivers: each one replays the scenario under a baseline and
//! the corresponding xApp and reports per-run metrics.

mod beam;
pub mod config;
mod mac;
pub mod output;
pub mod par;
mod relay;
mod rsu;

use std::collections::hash_map::DefaultHasher;

pub use config::{parse_config, Experiment, ExperimentConfig};
pub use output::{summarize, write_outputs, ResultRow, SummaryRow};
pub use par::Execution;

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sim::SimConfig;

/// Run every (sweep value, seed) job of `cfg` and return the detail rows in
/// sweep-major, seed-minor order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with(cfg, Execution::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let per_seed = match cfg.experiment {
        // one pass evaluates every threshold of a seed
        Experiment::Relay | Experiment::Overhead => {
            let runs = par::map(exec, &cfg.seeds, |&seed| relay::run(cfg, seed))?;
            let mut rows = Vec::new();
            for (i, _) in cfg.sweep.iter().enumerate() {
                for run in &runs {
                    rows.extend(run[i].iter().cloned());
                }
            }
            return Ok(rows);
        }
        _ => {
            let jobs: Vec<(f64, u64)> = cfg
                .sweep
                .iter()
                .flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s)))
                .collect();
            par::map(exec, &jobs, |&(v, seed)| match cfg.experiment {
                Experiment::Beam => beam::run(cfg, v, seed),
                Experiment::Mac => mac::run(cfg, v, seed),
                Experiment::Rsu => rsu::run(cfg, v, seed),
                Experiment::Relay | Experiment::Overhead => unreachable!(),
            })?
        }
    };
    Ok(per_seed.into_iter().flatten().collect())
}

fn sim_config(cfg: &ExperimentConfig, seed: u64) -> SimConfig {
    SimConfig {
        seed,
        ..cfg.sim.clone()
    }
}

fn new_scenario(cfg: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    Scenario::new(cfg.scenario.clone(), &sim_config(cfg, seed))
}

/// Paired runs must have observed the same environment.
fn check_paired(a: &DefaultHasher, b: &DefaultHasher, what: &str) -> Result<()> {
    use std::hash::Hasher;
    if a.finish() != b.finish() {
        return Err(Error::invariant(format!(
            "{what}: baseline and xApp passes saw different scenario traces"
        )));
    }
    Ok(())
}

/// Helper for building rows of one run.
struct RowSink {
    experiment: Experiment,
    sweep: f64,
    seed: u64,
    rows: Vec<ResultRow>,
}

impl RowSink {
    fn new(experiment: Experiment, sweep: f64, seed: u64) -> Self {
        Self {
            experiment,
            sweep,
            seed,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, metric: &str, value: f64, units: &str) {
        self.rows.push(ResultRow {
            experiment: self.experiment.name().to_string(),
            sweep: self.sweep,
            seed: self.seed,
            metric: metric.to_string(),
            value,
            units: units.to_string(),
        });
    }
}
